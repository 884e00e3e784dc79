#include "adafamily/optim.hpp"

#include "adafamily/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

namespace adafam {

std::string_view to_string(Algorithm algorithm) {
    switch (algorithm) {
    case Algorithm::AdaFamily: return "adafamily";
    case Algorithm::Adam: return "adam";
    case Algorithm::AdamW: return "adamw";
    case Algorithm::AdaBelief: return "adabelief";
    case Algorithm::AdaMomentum: return "adamomentum";
    }
    return "?";
}

std::string_view to_string(DecayMode mode) {
    switch (mode) {
    case DecayMode::None: return "none";
    case DecayMode::Coupled: return "coupled";
    case DecayMode::Decoupled: return "decoupled";
    }
    return "?";
}

Algorithm parse_algorithm(std::string_view text) {
    for (auto a : {Algorithm::AdaFamily, Algorithm::Adam, Algorithm::AdamW,
                   Algorithm::AdaBelief, Algorithm::AdaMomentum}) {
        if (text == to_string(a)) return a;
    }
    throw ConfigError("unknown algorithm '" + std::string(text) + "'");
}

DecayMode parse_decay_mode(std::string_view text) {
    for (auto d : {DecayMode::None, DecayMode::Coupled, DecayMode::Decoupled}) {
        if (text == to_string(d)) return d;
    }
    throw ConfigError("unknown decay mode '" + std::string(text) + "'");
}

void OptimizerConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw DomainError(what);
    };
    require(mu >= 0.0 && mu <= 1.0, "mu must lie in [0, 1]");
    require(alpha > 0.0 && std::isfinite(alpha), "alpha must be positive and finite");
    require(beta1 >= 0.0 && beta1 < 1.0, "beta1 must lie in [0, 1)");
    require(beta2 >= 0.0 && beta2 < 1.0, "beta2 must lie in [0, 1)");
    require(epsilon > 0.0 && std::isfinite(epsilon), "epsilon must be positive and finite");
    require(weight_decay >= 0.0 && std::isfinite(weight_decay),
            "weight_decay must be non-negative and finite");

    if (algorithm == Algorithm::Adam && decay_mode == DecayMode::Decoupled) {
        throw ConfigError("adam supports decay modes none and coupled only; use adamw");
    }
    if (algorithm != Algorithm::Adam && decay_mode == DecayMode::Coupled) {
        throw ConfigError(std::string(to_string(algorithm)) +
                          " supports decay modes none and decoupled only");
    }
}

double normalization_factor(double mu) {
    if (!(mu >= 0.0 && mu <= 1.0)) throw DomainError("mu must lie in [0, 1]");
    return 2.0 * (1.0 - std::abs(mu - 0.5));
}

OptimizerState::OptimizerState(std::size_t dim) : m_(dim, 0.0), v_(dim, 0.0) {}

void OptimizerState::reset() noexcept {
    std::fill(m_.begin(), m_.end(), 0.0);
    std::fill(v_.begin(), v_.end(), 0.0);
    t_ = 0;
    c_ = 1.0;
}

OptimizerState OptimizerState::restore(std::vector<double> m, std::vector<double> v,
                                       std::uint64_t t, double c) {
    if (m.size() != v.size()) throw ShapeError("m and v must have the same length");
    OptimizerState s;
    s.m_ = std::move(m);
    s.v_ = std::move(v);
    s.t_ = t;
    s.c_ = c;
    return s;
}

struct StepAccess {
    static std::vector<double>& m(OptimizerState& s) { return s.m_; }
    static std::vector<double>& v(OptimizerState& s) { return s.v_; }
    static std::uint64_t& t(OptimizerState& s) { return s.t_; }
    static double& c(OptimizerState& s) { return s.c_; }
};

namespace {

void check_inputs(const OptimizerState& state, std::span<const double> params,
                  std::span<const double> grad, const OptimizerConfig& config,
                  double lr_scale) {
    config.validate();
    if (!(lr_scale > 0.0 && std::isfinite(lr_scale))) {
        throw DomainError("lr_scale must be positive and finite");
    }
    if (params.size() != state.dim() || grad.size() != state.dim()) {
        throw ShapeError("optimizer state has length " + std::to_string(state.dim()) +
                         " but params/grad have lengths " + std::to_string(params.size()) +
                         "/" + std::to_string(grad.size()));
    }
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!std::isfinite(grad[i])) throw NumericError("non-finite gradient entry", i);
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!std::isfinite(params[i])) throw NumericError("non-finite parameter entry", i);
    }
}

// The five rules share the moment/bias-correction skeleton and differ in
// the squared signal fed to v and in where epsilon is added.
struct EpsPlacement {
    bool in_v;
    bool in_denominator;
};
constexpr EpsPlacement kEpsInV{true, false};
constexpr EpsPlacement kEpsInDenominator{false, true};
constexpr EpsPlacement kEpsInBoth{true, true};

template <class Signal>
void generic_step(OptimizerState& state, std::span<double> params,
                  std::span<const double> grad, const OptimizerConfig& cfg, double lr_scale,
                  EpsPlacement eps_at, Signal signal) {
    auto& m = StepAccess::m(state);
    auto& v = StepAccess::v(state);
    auto& t = StepAccess::t(state);

    ++t;
    const double lr = lr_scale * cfg.alpha;
    const double b1 = cfg.beta1;
    const double b2 = cfg.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
    const bool coupled = cfg.decay_mode == DecayMode::Coupled && cfg.weight_decay != 0.0;
    const bool decoupled = cfg.decay_mode == DecayMode::Decoupled && cfg.weight_decay != 0.0;

    for (std::size_t i = 0; i < params.size(); ++i) {
        const double theta = params[i];
        const double g = coupled ? grad[i] + cfg.weight_decay * theta : grad[i];
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        const double s = signal(g, m[i]);
        double vi = b2 * v[i] + (1.0 - b2) * (s * s);
        if (eps_at.in_v) vi += cfg.epsilon;
        v[i] = vi;

        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        const double denom = eps_at.in_denominator ? std::sqrt(v_hat) + cfg.epsilon
                                                   : std::sqrt(v_hat);
        double next = theta - lr * (m_hat / denom);
        if (decoupled) next -= lr * cfg.weight_decay * theta;
        params[i] = next;
    }
}

} // namespace

void adafamily_step(OptimizerState& state, std::span<double> params,
                    std::span<const double> grad, const OptimizerConfig& config,
                    double lr_scale) {
    check_inputs(state, params, grad, config, lr_scale);
    const double mu = config.mu;
    const double c = normalization_factor(mu);
    StepAccess::c(state) = c;
    generic_step(state, params, grad, config, lr_scale, kEpsInV,
                 [c, mu](double g, double m) { return c * ((1.0 - mu) * g - mu * m); });
}

void adam_step(OptimizerState& state, std::span<double> params, std::span<const double> grad,
               const OptimizerConfig& config, double lr_scale) {
    check_inputs(state, params, grad, config, lr_scale);
    generic_step(state, params, grad, config, lr_scale, kEpsInDenominator,
                 [](double g, double) { return g; });
}

void adamw_step(OptimizerState& state, std::span<double> params, std::span<const double> grad,
                const OptimizerConfig& config, double lr_scale) {
    check_inputs(state, params, grad, config, lr_scale);
    generic_step(state, params, grad, config, lr_scale, kEpsInDenominator,
                 [](double g, double) { return g; });
}

void adabelief_step(OptimizerState& state, std::span<double> params,
                    std::span<const double> grad, const OptimizerConfig& config,
                    double lr_scale) {
    check_inputs(state, params, grad, config, lr_scale);
    generic_step(state, params, grad, config, lr_scale, kEpsInBoth,
                 [](double g, double m) { return g - m; });
}

void adamomentum_step(OptimizerState& state, std::span<double> params,
                      std::span<const double> grad, const OptimizerConfig& config,
                      double lr_scale) {
    check_inputs(state, params, grad, config, lr_scale);
    generic_step(state, params, grad, config, lr_scale, kEpsInV,
                 [](double, double m) { return m; });
}

void step(OptimizerState& state, std::span<double> params, std::span<const double> grad,
          const OptimizerConfig& config, double lr_scale) {
    switch (config.algorithm) {
    case Algorithm::AdaFamily: return adafamily_step(state, params, grad, config, lr_scale);
    case Algorithm::Adam: return adam_step(state, params, grad, config, lr_scale);
    case Algorithm::AdamW: return adamw_step(state, params, grad, config, lr_scale);
    case Algorithm::AdaBelief: return adabelief_step(state, params, grad, config, lr_scale);
    case Algorithm::AdaMomentum: return adamomentum_step(state, params, grad, config, lr_scale);
    }
}

Optimizer::Optimizer(OptimizerConfig config, std::size_t dim)
    : config_(config), state_(dim) {
    config_.validate();
}

void Optimizer::step(std::span<double> params, std::span<const double> grad, double lr_scale) {
    adafam::step(state_, params, grad, config_, lr_scale);
}

namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
}

std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t& pos) {
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(in[pos + i]) << (8 * i);
    pos += 8;
    return x;
}

} // namespace

std::vector<std::uint8_t> serialize_state(const OptimizerState& state) {
    std::vector<std::uint8_t> out;
    out.reserve(24 + 16 * state.dim());
    put_u64(out, state.step_count());
    put_u64(out, std::bit_cast<std::uint64_t>(state.c()));
    put_u64(out, state.dim());
    for (double x : state.m()) put_u64(out, std::bit_cast<std::uint64_t>(x));
    for (double x : state.v()) put_u64(out, std::bit_cast<std::uint64_t>(x));
    return out;
}

OptimizerState deserialize_state(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 24) throw ParseError("checkpoint", 0, "truncated header");
    std::size_t pos = 0;
    const std::uint64_t t = get_u64(bytes, pos);
    const double c = std::bit_cast<double>(get_u64(bytes, pos));
    const std::uint64_t d = get_u64(bytes, pos);
    if (d > (bytes.size() - 24) / 16 || bytes.size() != 24 + 16 * d) {
        throw ParseError("checkpoint", 0, "payload length does not match dimension " +
                                              std::to_string(d));
    }
    std::vector<double> m(d), v(d);
    for (auto& x : m) x = std::bit_cast<double>(get_u64(bytes, pos));
    for (auto& x : v) x = std::bit_cast<double>(get_u64(bytes, pos));
    return OptimizerState::restore(std::move(m), std::move(v), t, c);
}

} // namespace adafam
