#include "adafamily/schedule.hpp"

#include "adafamily/error.hpp"

#include <cmath>
#include <string>

namespace adafam {

StepSchedule::StepSchedule(std::vector<Milestone> milestones)
    : milestones_(std::move(milestones)) {}

void StepSchedule::validate(std::uint64_t epochs) const {
    for (std::size_t i = 0; i < milestones_.size(); ++i) {
        const auto& ms = milestones_[i];
        if (i > 0 && ms.epoch <= milestones_[i - 1].epoch) {
            throw ConfigError("schedule milestones must be strictly increasing");
        }
        if (ms.epoch >= epochs) {
            throw ConfigError("schedule milestone " + std::to_string(ms.epoch) +
                              " is not below the epoch count " + std::to_string(epochs));
        }
        if (!(ms.factor > 0.0) || !std::isfinite(ms.factor)) {
            throw ConfigError("schedule factors must be positive and finite");
        }
    }
}

double StepSchedule::scale_at(std::uint64_t epoch) const noexcept {
    double scale = 1.0;
    for (const auto& ms : milestones_) {
        if (ms.epoch <= epoch) scale *= ms.factor;
    }
    return scale;
}

} // namespace adafam
