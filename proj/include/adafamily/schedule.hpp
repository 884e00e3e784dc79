#pragma once

#include <cstdint>
#include <vector>

namespace adafam {

struct Milestone {
    std::uint64_t epoch = 0;
    double factor = 1.0;

    bool operator==(const Milestone&) const = default;
};

// Step decay: the multiplier at epoch e (0-based) is the product of the
// factors of every milestone <= e.
//
// The harness evaluates schedules once per epoch and hands the value to the
// optimizer as lr_scale. A schedule over mu (or any other hyperparameter)
// would be evaluated at the same point in the training loop and written into
// the OptimizerConfig before the epoch's steps; the optimizer reads mu and
// recomputes its normalization factor on every step, so no state has to change.
class StepSchedule {
public:
    StepSchedule() = default;
    explicit StepSchedule(std::vector<Milestone> milestones);

    // Throws ConfigError unless milestones are strictly increasing, below
    // `epochs`, and every factor is positive and finite.
    void validate(std::uint64_t epochs) const;

    double scale_at(std::uint64_t epoch) const noexcept;
    const std::vector<Milestone>& milestones() const noexcept { return milestones_; }

    bool operator==(const StepSchedule&) const = default;

private:
    std::vector<Milestone> milestones_;
};

} // namespace adafam
