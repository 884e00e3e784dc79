#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "adafamily/checks.hpp"
#include "adafamily/error.hpp"
#include "adafamily/optim.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace adafam;

namespace {

OptimizerConfig cfg(Algorithm a, double mu = 0.0) {
    OptimizerConfig c;
    c.algorithm = a;
    c.mu = mu;
    return c;
}

// One step from theta0 with a single gradient, scalar problem.
double one_step(const OptimizerConfig& c, double theta0, double g, double lr_scale = 1.0) {
    OptimizerState st(1);
    std::vector<double> theta{theta0};
    const std::vector<double> grad{g};
    step(st, theta, grad, c, lr_scale);
    return theta[0];
}

bool rel_close(double a, double b, double tol = 1e-12) {
    return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

std::vector<double> gaussian(std::mt19937_64& gen, std::size_t n, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    std::vector<double> out(n);
    for (auto& x : out) x = dist(gen);
    return out;
}

const Algorithm kAll[] = {Algorithm::AdaFamily, Algorithm::Adam, Algorithm::AdamW,
                          Algorithm::AdaBelief, Algorithm::AdaMomentum};

} // namespace

TEST_CASE("normalization factor") {
    CHECK(normalization_factor(0.0) == 1.0);
    CHECK(normalization_factor(1.0) == 1.0);
    CHECK(normalization_factor(0.5) == 2.0);
    CHECK(normalization_factor(0.25) == 1.5);
    CHECK(normalization_factor(0.75) == 1.5);
    CHECK_THROWS_AS(normalization_factor(-0.01), DomainError);
    CHECK_THROWS_AS(normalization_factor(1.01), DomainError);
    CHECK_THROWS_AS(normalization_factor(std::nan("")), DomainError);
}

TEST_CASE("normalization factor is symmetric and bounded") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double mu = u(gen);
        const double c = normalization_factor(mu);
        // 1 - mu itself rounds for mu < 0.5, hence the ulp-level slack.
        CHECK(std::abs(c - normalization_factor(1.0 - mu)) <= 4e-16);
        CHECK(c >= 1.0);
        CHECK(c <= 2.0);
    }
}

// Expected values below come from a 40-digit hand unroll of one step of each
// recurrence (theta0 = 0, g = 1, alpha 1e-3, betas 0.9/0.999, eps 1e-8).
TEST_CASE("adafamily one-step values") {
    CHECK(rel_close(one_step(cfg(Algorithm::AdaFamily, 0.0), 0.0, 1.0), -9.999950000374996875e-4));
    CHECK(rel_close(one_step(cfg(Algorithm::AdaFamily, 0.5), 0.0, 1.0), -1.111104252464054623e-3));
    CHECK(rel_close(one_step(cfg(Algorithm::AdaFamily, 0.25), 0.0, 1.0), -9.195363423040358616e-4));

    SUBCASE("mu = 0.5 equals -alpha / sqrt(0.81001)") {
        CHECK(rel_close(one_step(cfg(Algorithm::AdaFamily, 0.5), 0.0, 1.0), -1e-3 / std::sqrt(0.81001)));
    }

    SUBCASE("state after one step at mu = 0 and mu = 0.5") {
        OptimizerState st(1);
        std::vector<double> theta{0.0};
        adafamily_step(st, theta, std::vector<double>{1.0}, cfg(Algorithm::AdaFamily, 0.5));
        CHECK(st.step_count() == 1);
        CHECK(st.c() == 2.0);
        CHECK(rel_close(st.m()[0], 0.1));
        CHECK(rel_close(st.v()[0], 8.1001e-4));

        OptimizerState st0(1);
        std::vector<double> theta0{0.0};
        adafamily_step(st0, theta0, std::vector<double>{1.0}, cfg(Algorithm::AdaFamily, 0.0));
        CHECK(st0.c() == 1.0);
        CHECK(rel_close(st0.v()[0], 0.00100001));
    }

    SUBCASE("mu = 1 with zero gradient does not move") {
        OptimizerState st(1);
        std::vector<double> theta{0.0};
        adafamily_step(st, theta, std::vector<double>{0.0}, cfg(Algorithm::AdaFamily, 1.0));
        CHECK(theta[0] == 0.0);
        CHECK(st.m()[0] == 0.0);
        CHECK(st.v()[0] == 1e-8);
    }
}

TEST_CASE("adam one-step values") {
    CHECK(rel_close(one_step(cfg(Algorithm::Adam), 0.0, 1.0), -1e-3 / (1.0 + 1e-8)));
    CHECK(one_step(cfg(Algorithm::Adam), 0.0, 0.0) == 0.0);

    SUBCASE("coupled decay enters both moments") {
        auto c = cfg(Algorithm::Adam);
        c.decay_mode = DecayMode::Coupled;
        c.weight_decay = 0.1;
        OptimizerState st(1);
        std::vector<double> theta{1.0};
        adam_step(st, theta, std::vector<double>{1.0}, c);
        CHECK(rel_close(st.m()[0], 0.1 * 1.1));
        CHECK(rel_close(st.v()[0], 0.001 * 1.21));
        CHECK(rel_close(theta[0], 0.9990000000090909091));
    }
}

TEST_CASE("adamw one-step values") {
    auto plain = cfg(Algorithm::Adam);
    auto w = cfg(Algorithm::AdamW);
    w.decay_mode = DecayMode::Decoupled;

    SUBCASE("zero decay is bitwise identical to adam") {
        w.weight_decay = 0.0;
        std::mt19937_64 gen(3);
        OptimizerState sa(8), sw(8);
        auto ta = gaussian(gen, 8);
        auto tw = ta;
        for (int i = 0; i < 50; ++i) {
            const auto g = gaussian(gen, 8);
            adam_step(sa, ta, g, plain);
            adamw_step(sw, tw, g, w);
        }
        CHECK(ta == tw);
        CHECK(sa == sw);
    }
    SUBCASE("lambda = 1e-4") {
        w.weight_decay = 1e-4;
        CHECK(rel_close(one_step(w, 1.0, 1.0), 0.99899990000999999990));
    }
    SUBCASE("pure decay") {
        w.weight_decay = 0.1;
        CHECK(rel_close(one_step(w, 1.0, 0.0), 1.0 - 1e-3 * 0.1, 1e-15));
    }
    SUBCASE("decay follows the schedule multiplier") {
        w.weight_decay = 0.1;
        CHECK(rel_close(one_step(w, 1.0, 0.0, 0.5), 1.0 - 0.5 * 1e-3 * 0.1, 1e-15));
    }
}

TEST_CASE("adabelief values") {
    CHECK(rel_close(one_step(cfg(Algorithm::AdaBelief), 0.0, 1.0), -1.111104240118528162e-3));
    CHECK(one_step(cfg(Algorithm::AdaBelief), 0.0, 0.0) == 0.0);

    SUBCASE("constant gradient: per-step displacement grows") {
        OptimizerState st(1);
        std::vector<double> theta{0.0};
        std::vector<double> disp;
        for (int t = 0; t < 100; ++t) {
            const double before = theta[0];
            adabelief_step(st, theta, std::vector<double>{1.0}, cfg(Algorithm::AdaBelief));
            disp.push_back(before - theta[0]);
        }
        CHECK(rel_close(disp[0], 1.111104240118528162e-3, 1e-10));
        CHECK(rel_close(disp[9], 1.635418310734083686e-3, 1e-10));
        CHECK(rel_close(disp[99], 4.954468099085728241e-3, 1e-10));
        CHECK(rel_close(theta[0], -0.3327362053567024629, 1e-10));
        for (std::size_t i = 1; i < disp.size(); ++i) CHECK(disp[i] > disp[i - 1]);
    }
}

TEST_CASE("adamomentum values") {
    OptimizerState st(1);
    std::vector<double> theta{0.0};
    adamomentum_step(st, theta, std::vector<double>{1.0}, cfg(Algorithm::AdaMomentum));
    CHECK(rel_close(st.m()[0], 0.1));
    CHECK(rel_close(st.v()[0], 0.001 * 0.01 + 1e-8));
    CHECK(rel_close(theta[0], -9.995003746877731916e-3));
    CHECK(one_step(cfg(Algorithm::AdaMomentum), 0.0, 0.0) == 0.0);
}

TEST_CASE("endpoint equivalences") {
    std::mt19937_64 gen(99);
    constexpr std::size_t d = 32;
    for (int stream = 0; stream < 3; ++stream) {
        const auto theta0 = gaussian(gen, d);
        OptimizerState s1(d), sm(d), s0(d), s05(d);
        auto t1 = theta0, tm = theta0, t0 = theta0, t05 = theta0, oa = theta0, ob = theta0;
        std::vector<double> ma(d, 0), va(d, 0), mb(d, 0), vb(d, 0);
        for (long t = 1; t <= 100; ++t) {
            const auto g = gaussian(gen, d, 0.1);
            adafamily_step(s1, t1, g, cfg(Algorithm::AdaFamily, 1.0));
            adamomentum_step(sm, tm, g, cfg(Algorithm::AdaMomentum));
            adafamily_step(s0, t0, g, cfg(Algorithm::AdaFamily, 0.0));
            adafamily_step(s05, t05, g, cfg(Algorithm::AdaFamily, 0.5));
            checks::oracle_eps_in_v_adam(oa, ma, va, t, g, 1e-3, 0.9, 0.999, 1e-8);
            checks::oracle_eps_in_v_adabelief(ob, mb, vb, t, g, 1e-3, 0.9, 0.999, 1e-8);
        }
        CHECK(checks::max_relative_divergence(t1, tm) < 1e-12);
        CHECK(checks::max_relative_divergence(t0, oa) < 1e-12);
        CHECK(checks::max_relative_divergence(t05, ob) < 1e-12);
        // Similar, not identical: standard Adam places eps in the denominator.
        OptimizerState sa(d);
        auto ta = theta0;
        std::mt19937_64 replay(5);
        OptimizerState sf(d);
        auto tf = theta0;
        for (int t = 0; t < 10; ++t) {
            const auto g = gaussian(replay, d, 0.1);
            adam_step(sa, ta, g, cfg(Algorithm::Adam));
            adafamily_step(sf, tf, g, cfg(Algorithm::AdaFamily, 0.0));
        }
        CHECK(ta != tf);
    }
}

TEST_CASE("v lower bound holds for every mu") {
    std::mt19937_64 gen(17);
    for (double mu : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const auto c = cfg(Algorithm::AdaFamily, mu);
        OptimizerState st(8);
        auto theta = gaussian(gen, 8);
        for (int t = 1; t <= 300; ++t) {
            adafamily_step(st, theta, gaussian(gen, 8, t % 3 == 0 ? 0.0 : 1e-3), c);
            const double bound = 1e-8 * (1 - std::pow(0.999, t)) / (1 - 0.999);
            for (double v : st.v()) CHECK(v >= bound - 1e-15);
        }
    }
}

TEST_CASE("errors leave params and state untouched") {
    const auto c = cfg(Algorithm::AdaFamily, 0.5);
    OptimizerState st(3);
    std::vector<double> theta{1.0, 2.0, 3.0};
    adafamily_step(st, theta, std::vector<double>{0.1, 0.2, 0.3}, c);
    const auto st_before = st;
    const auto theta_before = theta;

    CHECK_THROWS_AS(adafamily_step(st, theta, std::vector<double>{0.1, 0.2}, c), ShapeError);
    std::vector<double> short_theta{1.0};
    CHECK_THROWS_AS(adafamily_step(st, short_theta, std::vector<double>{0.1}, c), ShapeError);

    try {
        adafamily_step(st, theta, std::vector<double>{0.1, std::numeric_limits<double>::infinity(), 0.3}, c);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(e.index() == 1);
    }
    CHECK_THROWS_AS(adafamily_step(st, theta, std::vector<double>{0.1, 0.2, 0.3}, cfg(Algorithm::AdaFamily, 1.5)),
                    DomainError);
    CHECK_THROWS_AS(adafamily_step(st, theta, std::vector<double>{0.1, 0.2, 0.3}, c, 0.0), DomainError);
    CHECK(st == st_before);
    CHECK(theta == theta_before);
}

TEST_CASE("config validation") {
    auto c = cfg(Algorithm::Adam);
    c.decay_mode = DecayMode::Decoupled;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = cfg(Algorithm::AdaBelief);
    c.decay_mode = DecayMode::Coupled;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = cfg(Algorithm::AdaFamily);
    c.beta1 = 1.0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = cfg(Algorithm::AdaFamily);
    c.epsilon = 0.0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = cfg(Algorithm::AdaFamily);
    c.weight_decay = -1.0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = cfg(Algorithm::AdaFamily);
    c.alpha = 0.0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    CHECK_THROWS_AS(Optimizer(c, 4), DomainError);

    for (auto a : kAll) CHECK(parse_algorithm(to_string(a)) == a);
    CHECK_THROWS_AS(parse_algorithm("sgd"), ConfigError);
}

TEST_CASE("reset and replay") {
    std::mt19937_64 gen(23);
    std::vector<std::vector<double>> grads;
    for (int i = 0; i < 100; ++i) grads.push_back(gaussian(gen, 6));
    const auto theta0 = gaussian(gen, 6);

    for (auto a : kAll) {
        Optimizer opt(cfg(a, 0.25), 6);
        CHECK(opt.state() == OptimizerState(6));
        opt.reset();
        CHECK(opt.state() == OptimizerState(6));

        auto run = [&] {
            auto theta = theta0;
            for (const auto& g : grads) opt.step(theta, g);
            return theta;
        };
        const auto first = run();
        CHECK(opt.state().step_count() == 100);
        opt.reset();
        CHECK(opt.state().step_count() == 0);
        for (double x : opt.state().m()) CHECK(x == 0.0);
        for (double x : opt.state().v()) CHECK(x == 0.0);
        CHECK(run() == first);
    }
}

TEST_CASE("sign correctness on a 1-D quadratic") {
    for (auto a : kAll) {
        for (double mu : {0.0, 0.5, 1.0}) {
            OptimizerState st(1);
            std::vector<double> theta{1.0};
            double prev = 1.0;
            for (int t = 0; t < 100; ++t) {
                step(st, theta, std::vector<double>{theta[0]}, cfg(a, mu));
                CHECK(std::abs(theta[0]) < prev);
                prev = std::abs(theta[0]);
            }
        }
    }
}

TEST_CASE("lr_scale scales the first update") {
    for (auto a : kAll) {
        const double full = one_step(cfg(a, 0.5), 0.0, 0.3);
        const double half = one_step(cfg(a, 0.5), 0.0, 0.3, 0.5);
        CHECK(rel_close(half, 0.5 * full, 1e-15));
    }
}

TEST_CASE("state size parity and checkpoints") {
    std::mt19937_64 gen(31);
    for (auto a : kAll) {
        Optimizer opt(cfg(a, 0.75), 13);
        auto theta = gaussian(gen, 13);
        for (int i = 0; i < 7; ++i) opt.step(theta, gaussian(gen, 13));
        CHECK(opt.state().auxiliary_reals() == 26);

        const auto bytes = serialize_state(opt.state());
        CHECK(bytes.size() == 24 + 16 * 13);
        const auto back = deserialize_state(bytes);
        CHECK(back == opt.state());

        // Resuming from the checkpoint continues the same trajectory.
        OptimizerState resumed = back;
        auto t1 = theta, t2 = theta;
        const auto g = gaussian(gen, 13);
        opt.step(t1, g);
        step(resumed, t2, g, opt.config());
        CHECK(t1 == t2);
    }
    std::vector<std::uint8_t> truncated(30, 0);
    CHECK_THROWS_AS(deserialize_state(truncated), ParseError);
}

TEST_CASE("checkpoint header is little-endian t then c") {
    OptimizerState st(1);
    std::vector<double> theta{0.0};
    adafamily_step(st, theta, std::vector<double>{1.0}, cfg(Algorithm::AdaFamily, 0.5));
    const auto bytes = serialize_state(st);
    CHECK(bytes[0] == 1);
    for (int i = 1; i < 8; ++i) CHECK(bytes[i] == 0);
    // 2.0 = 0x4000000000000000
    CHECK(bytes[15] == 0x40);
    CHECK(bytes[16] == 1);
}
