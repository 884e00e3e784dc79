#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace adafam {

enum class Algorithm { AdaFamily, Adam, AdamW, AdaBelief, AdaMomentum };

// How weight decay enters the update.
//   Coupled:   lambda * theta is added to the gradient before the moment updates (L2).
//   Decoupled: theta shrinks by lr * lambda * theta alongside the gradient step.
enum class DecayMode { None, Coupled, Decoupled };

std::string_view to_string(Algorithm algorithm);
std::string_view to_string(DecayMode mode);
Algorithm parse_algorithm(std::string_view text);
DecayMode parse_decay_mode(std::string_view text);

struct OptimizerConfig {
    Algorithm algorithm = Algorithm::AdaFamily;
    double mu = 0.5;  // only read by AdaFamily
    double alpha = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
    DecayMode decay_mode = DecayMode::None;

    // Throws DomainError for out-of-range scalars and ConfigError for an
    // algorithm/decay-mode combination that is not allowed (Adam is the only
    // algorithm with coupled decay, and the only one without decoupled decay).
    void validate() const;

    bool operator==(const OptimizerConfig&) const = default;
};

// c = 2 * (1 - |mu - 0.5|). Throws DomainError unless 0 <= mu <= 1.
double normalization_factor(double mu);

// Per-parameter optimizer memory: the first moment m, the preconditioner v,
// the step counter and the cached AdaFamily normalization factor. Every
// algorithm uses exactly these two buffers.
class OptimizerState {
public:
    OptimizerState() = default;
    explicit OptimizerState(std::size_t dim);

    std::size_t dim() const noexcept { return m_.size(); }
    std::uint64_t step_count() const noexcept { return t_; }
    double c() const noexcept { return c_; }

    std::span<const double> m() const noexcept { return m_; }
    std::span<const double> v() const noexcept { return v_; }

    static constexpr std::size_t kAuxiliaryBuffers = 2;
    std::size_t auxiliary_reals() const noexcept { return m_.size() + v_.size(); }

    // Zero both buffers and the step counter; the dimension is kept.
    void reset() noexcept;

    // Rebuilds a state from checkpointed parts. Buffers must be equally long.
    static OptimizerState restore(std::vector<double> m, std::vector<double> v,
                                  std::uint64_t t, double c);

    bool operator==(const OptimizerState&) const = default;

private:
    friend struct StepAccess;

    std::vector<double> m_;
    std::vector<double> v_;
    std::uint64_t t_ = 0;
    double c_ = 1.0;
};

// One update of each rule. `params` is updated in place. `lr_scale` is the
// schedule multiplier applied to alpha (and to decoupled weight decay).
// All of them throw ShapeError on length mismatch, NumericError naming the
// first non-finite gradient or parameter entry, and DomainError/ConfigError
// for an invalid config. On error neither params nor state are modified.
void adafamily_step(OptimizerState& state, std::span<double> params,
                    std::span<const double> grad, const OptimizerConfig& config,
                    double lr_scale = 1.0);
void adam_step(OptimizerState& state, std::span<double> params,
               std::span<const double> grad, const OptimizerConfig& config,
               double lr_scale = 1.0);
void adamw_step(OptimizerState& state, std::span<double> params,
                std::span<const double> grad, const OptimizerConfig& config,
                double lr_scale = 1.0);
void adabelief_step(OptimizerState& state, std::span<double> params,
                    std::span<const double> grad, const OptimizerConfig& config,
                    double lr_scale = 1.0);
void adamomentum_step(OptimizerState& state, std::span<double> params,
                      std::span<const double> grad, const OptimizerConfig& config,
                      double lr_scale = 1.0);

// Dispatches on config.algorithm.
void step(OptimizerState& state, std::span<double> params, std::span<const double> grad,
          const OptimizerConfig& config, double lr_scale = 1.0);

// Config plus state for a fixed parameter dimension.
class Optimizer {
public:
    Optimizer(OptimizerConfig config, std::size_t dim);

    void step(std::span<double> params, std::span<const double> grad, double lr_scale = 1.0);
    void reset() noexcept { state_.reset(); }

    const OptimizerConfig& config() const noexcept { return config_; }
    const OptimizerState& state() const noexcept { return state_; }
    OptimizerState& state() noexcept { return state_; }

private:
    OptimizerConfig config_;
    OptimizerState state_;
};

// Checkpoint layout, all little-endian:
//   u64 t | f64 c | u64 d | f64 m[d] | f64 v[d]
std::vector<std::uint8_t> serialize_state(const OptimizerState& state);
OptimizerState deserialize_state(std::span<const std::uint8_t> bytes);

} // namespace adafam
