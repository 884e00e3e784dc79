#pragma once

#include "adafamily/optim.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace adafam::checks {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

struct CheckInfo {
    std::string name;
    std::string description;
};

std::vector<CheckInfo> list_checks();

// Runs every check whose name contains `filter` (all when empty), in the
// order of list_checks().
std::vector<CheckResult> run_checks(std::string_view filter = {});

// Individual checks.
CheckResult check_normalization_factor();
CheckResult check_endpoint_oracles();
CheckResult check_v_lower_bound();
CheckResult check_gradients();
CheckResult check_convergence();
CheckResult check_protocol_reproduction();
CheckResult check_state_parity();
CheckResult check_table_fidelity();

// Reference optimizers coded directly from the recurrences, sharing nothing
// with the library's step functions. Both add epsilon to v every step and
// leave it out of the denominator.
void oracle_eps_in_v_adam(std::vector<double>& theta, std::vector<double>& m,
                          std::vector<double>& v, long t, const std::vector<double>& g,
                          double alpha, double beta1, double beta2, double eps);
void oracle_eps_in_v_adabelief(std::vector<double>& theta, std::vector<double>& m,
                               std::vector<double>& v, long t, const std::vector<double>& g,
                               double alpha, double beta1, double beta2, double eps);

// max_i |a_i - b_i| / max(|a_i|, |b_i|), with 0 for exactly equal entries.
double max_relative_divergence(const std::vector<double>& a, const std::vector<double>& b);

// Gradient-check error: max_i |a_i - n_i| / max(|a_i|, |n_i|, floor).
inline constexpr double kGradCheckFloor = 1e-6;
double max_gradcheck_error(const std::vector<double>& analytic, const std::vector<double>& numeric);

// Convergence probes shared by the `convergence` check and its tests.
inline constexpr std::size_t kQuadraticDim = 10;
inline constexpr double kQuadraticCondition = 100.0;
inline constexpr std::uint64_t kQuadraticSeed = 0;
inline constexpr std::uint64_t kQuadraticBudget = 20000;
inline constexpr double kQuadraticGapTolerance = 1e-6;
inline constexpr std::uint64_t kLogregBudget = 500;
inline constexpr double kLogregAccuracy = 0.95;

struct ConvergenceProbe {
    std::uint64_t quadratic_steps = 0;  // first step with f - f* below tolerance; 0 if never
    double quadratic_best_gap = 0.0;
    std::uint64_t logreg_steps = 0;     // first step with train accuracy >= threshold; 0 if never
    double logreg_best_accuracy = 0.0;
};

// Full-batch steps on the quadratic; seed-0 mini-batches of the default
// blobs-logreg problem (batch 32, no schedule) for logistic regression.
ConvergenceProbe probe_convergence(const OptimizerConfig& config);

} // namespace adafam::checks
