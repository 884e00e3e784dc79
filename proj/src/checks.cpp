#include "adafamily/checks.hpp"

#include "adafamily/harness.hpp"
#include "adafamily/io.hpp"
#include "adafamily/problems.hpp"
#include "adafamily/rng.hpp"
#include "adafamily/table.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

namespace adafam::checks {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<double> normals(CounterRng& rng, std::size_t n, double scale = 1.0) {
    std::vector<double> out(n);
    for (auto& x : out) x = scale * rng.normal();
    return out;
}

OptimizerConfig base_config(Algorithm a, double mu = 0.0) {
    OptimizerConfig c;
    c.algorithm = a;
    c.mu = mu;
    return c;  // alpha 1e-3, betas 0.9/0.999, eps 1e-8, no decay
}

std::string fmt(double x) {
    std::ostringstream ss;
    ss.precision(3);
    ss << x;
    return ss.str();
}

} // namespace

void oracle_eps_in_v_adam(std::vector<double>& theta, std::vector<double>& m,
                          std::vector<double>& v, long t, const std::vector<double>& g,
                          double alpha, double beta1, double beta2, double eps) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = beta1 * m[i] + (1 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1 - beta2) * g[i] * g[i] + eps;
        const double mh = m[i] / (1 - std::pow(beta1, t));
        const double vh = v[i] / (1 - std::pow(beta2, t));
        theta[i] -= alpha * mh / std::sqrt(vh);
    }
}

void oracle_eps_in_v_adabelief(std::vector<double>& theta, std::vector<double>& m,
                               std::vector<double>& v, long t, const std::vector<double>& g,
                               double alpha, double beta1, double beta2, double eps) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = beta1 * m[i] + (1 - beta1) * g[i];
        const double belief = g[i] - m[i];
        v[i] = beta2 * v[i] + (1 - beta2) * belief * belief + eps;
        const double mh = m[i] / (1 - std::pow(beta1, t));
        const double vh = v[i] / (1 - std::pow(beta2, t));
        theta[i] -= alpha * mh / std::sqrt(vh);
    }
}

double max_relative_divergence(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) continue;
        worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(std::abs(a[i]), std::abs(b[i])));
    }
    return worst;
}

double max_gradcheck_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), kGradCheckFloor});
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
    return worst;
}

CheckResult check_normalization_factor() {
    CheckResult r{"normalization-factor", true, "", 0.0};
    const auto start = Clock::now();
    const bool endpoints = normalization_factor(0.0) == 1.0 && normalization_factor(1.0) == 1.0 &&
                           normalization_factor(0.5) == 2.0;
    CounterRng rng(2024, 1);
    std::size_t asym = 0;
    for (int i = 0; i < 1000; ++i) {
        const double mu = rng.uniform();
        const double c = normalization_factor(mu);
        if (c != normalization_factor(1.0 - mu) || c < 1.0 || c > 2.0) ++asym;
    }
    r.passed = endpoints && asym == 0;
    r.detail = std::string("c(0)=c(1)=1, c(0.5)=2: ") + (endpoints ? "yes" : "no") +
               "; symmetry violations over 1000 random mu: " + std::to_string(asym);
    r.seconds = seconds_since(start);
    return r;
}

CheckResult check_endpoint_oracles() {
    CheckResult r{"endpoint-oracles", true, "", 0.0};
    const auto start = Clock::now();
    constexpr std::size_t d = 32;
    constexpr int steps = 100;
    constexpr int streams = 5;
    double worst_mom = 0.0, worst_adam = 0.0, worst_belief = 0.0;

    for (int s = 0; s < streams; ++s) {
        CounterRng rng(1000 + s, 7);
        const auto theta0 = normals(rng, d);

        auto fam1 = base_config(Algorithm::AdaFamily, 1.0);
        auto mom = base_config(Algorithm::AdaMomentum);
        auto fam0 = base_config(Algorithm::AdaFamily, 0.0);
        auto fam05 = base_config(Algorithm::AdaFamily, 0.5);

        OptimizerState st_f1(d), st_mom(d), st_f0(d), st_f05(d);
        auto th_f1 = theta0, th_mom = theta0, th_f0 = theta0, th_f05 = theta0;
        auto th_oa = theta0, th_ob = theta0;
        std::vector<double> ma(d, 0.0), va(d, 0.0), mb(d, 0.0), vb(d, 0.0);

        for (int t = 1; t <= steps; ++t) {
            // Gradient scale varies over the stream so v sees small and large signals.
            const auto g = normals(rng, d, std::pow(10.0, rng.uniform(-4.0, 1.0)));
            adafamily_step(st_f1, th_f1, g, fam1);
            adamomentum_step(st_mom, th_mom, g, mom);
            adafamily_step(st_f0, th_f0, g, fam0);
            adafamily_step(st_f05, th_f05, g, fam05);
            oracle_eps_in_v_adam(th_oa, ma, va, t, g, 1e-3, 0.9, 0.999, 1e-8);
            oracle_eps_in_v_adabelief(th_ob, mb, vb, t, g, 1e-3, 0.9, 0.999, 1e-8);
            worst_mom = std::max(worst_mom, max_relative_divergence(th_f1, th_mom));
            worst_adam = std::max(worst_adam, max_relative_divergence(th_f0, th_oa));
            worst_belief = std::max(worst_belief, max_relative_divergence(th_f05, th_ob));
        }
    }
    r.seconds = seconds_since(start);
    r.passed = worst_mom < 1e-12 && worst_adam < 1e-12 && worst_belief < 1e-12 && r.seconds < 1.0;
    r.detail = "max rel divergence: mu=1 vs AdaMomentum " + fmt(worst_mom) +
               ", mu=0 vs eps-in-v Adam " + fmt(worst_adam) + ", mu=0.5 vs eps-in-v AdaBelief " +
               fmt(worst_belief) + " (limit 1e-12); " + fmt(r.seconds) + " s (limit 1 s)";
    return r;
}

CheckResult check_v_lower_bound() {
    CheckResult r{"v-lower-bound", true, "", 0.0};
    const auto start = Clock::now();
    constexpr std::size_t d = 16;
    std::size_t violations = 0, zero_denoms = 0;
    for (double mu : kDefaultMus) {
        auto cfg = base_config(Algorithm::AdaFamily, mu);
        OptimizerState st(d);
        CounterRng rng(77, static_cast<std::uint64_t>(mu * 100));
        auto theta = normals(rng, d);
        for (int t = 1; t <= 1000; ++t) {
            // Exact zeros and tiny gradients stress the floor.
            auto g = normals(rng, d, rng.uniform() < 0.2 ? 0.0 : std::pow(10.0, rng.uniform(-8.0, 1.0)));
            adafamily_step(st, theta, g, cfg);
            const double bound = cfg.epsilon * (1.0 - std::pow(cfg.beta2, t)) / (1.0 - cfg.beta2);
            const double bc2 = 1.0 - std::pow(cfg.beta2, t);
            for (double vi : st.v()) {
                if (vi < bound - 1e-15) ++violations;
                if (!(std::sqrt(vi / bc2) > 0.0)) ++zero_denoms;
            }
            for (double x : theta) {
                if (!std::isfinite(x)) ++zero_denoms;
            }
        }
    }
    r.passed = violations == 0 && zero_denoms == 0;
    r.detail = "5 mu values x 1000 steps x 16 entries: " + std::to_string(violations) +
               " bound violations, " + std::to_string(zero_denoms) + " zero denominators";
    r.seconds = seconds_since(start);
    return r;
}

CheckResult check_gradients() {
    CheckResult r{"gradient-checks", true, "", 0.0};
    const auto start = Clock::now();
    constexpr int draws = 20;
    CounterRng rng(4242, 9);
    auto random_batch = [&](std::size_t n, std::size_t p, int k) {
        Batch b;
        b.features = Matrix(n, p);
        for (auto& x : b.features.data) x = 2.0 * rng.normal();
        for (std::size_t i = 0; i < n; ++i) b.labels.push_back(static_cast<int>(rng.below(k)));
        return b;
    };

    double worst[4] = {0, 0, 0, 0};
    for (int i = 0; i < draws; ++i) {
        {
            const auto dim = 2 + rng.below(9);
            const auto q = make_random_quadratic(dim, 1.0 + 99.0 * rng.uniform(), rng.next_u64());
            const auto x = normals(rng, dim, 2.0);
            worst[0] = std::max(worst[0], max_gradcheck_error(eval_loss_grad(q, x).grad,
                                                              finite_diff_grad(q, x)));
        }
        {
            const auto ros = Problem::rosenbrock();
            const std::vector<double> x{rng.uniform(-2.0, 2.0), rng.uniform(-1.0, 3.0)};
            worst[1] = std::max(worst[1], max_gradcheck_error(eval_loss_grad(ros, x).grad,
                                                              finite_diff_grad(ros, x)));
        }
        {
            const auto p = 1 + rng.below(5);
            const int k = 2 + static_cast<int>(rng.below(3));
            const auto lr = Problem::logistic_regression(p, k);
            const auto b = random_batch(1 + rng.below(16), p, k);
            const auto x = normals(rng, lr.dim());
            worst[2] = std::max(worst[2], max_gradcheck_error(eval_loss_grad(lr, x, &b).grad,
                                                              finite_diff_grad(lr, x, &b)));
        }
        {
            const auto p = 1 + rng.below(5);
            const auto h = 1 + rng.below(8);
            const int k = 2 + static_cast<int>(rng.below(3));
            const auto mlp = Problem::mlp1(p, h, k);
            const auto b = random_batch(1 + rng.below(16), p, k);
            const auto x = init_params(mlp, rng.next_u64());
            worst[3] = std::max(worst[3], max_gradcheck_error(eval_loss_grad(mlp, x, &b).grad,
                                                              finite_diff_grad(mlp, x, &b)));
        }
    }
    r.seconds = seconds_since(start);
    r.passed = std::all_of(std::begin(worst), std::end(worst), [](double w) { return w < 1e-5; }) &&
               r.seconds < 10.0;
    r.detail = "max rel error over 20 draws: quadratic " + fmt(worst[0]) + ", rosenbrock " +
               fmt(worst[1]) + ", logreg " + fmt(worst[2]) + ", mlp " + fmt(worst[3]) +
               " (limit 1e-5); " + fmt(r.seconds) + " s (limit 10 s)";
    return r;
}

ConvergenceProbe probe_convergence(const OptimizerConfig& config) {
    ConvergenceProbe probe;
    {
        const auto q = make_random_quadratic(kQuadraticDim, kQuadraticCondition, kQuadraticSeed);
        const double fstar = q.analytic_minimum();
        auto x = init_params(q, 0);
        OptimizerState st(q.dim());
        probe.quadratic_best_gap = eval_loss(q, x) - fstar;
        for (std::uint64_t t = 1; t <= kQuadraticBudget; ++t) {
            step(st, x, eval_loss_grad(q, x).grad, config);
            const double gap = eval_loss(q, x) - fstar;
            probe.quadratic_best_gap = std::min(probe.quadratic_best_gap, gap);
            if (gap < kQuadraticGapTolerance) {
                probe.quadratic_steps = t;
                break;
            }
        }
    }
    {
        const auto prepared = prepare(default_problem("blobs-logreg"));
        const auto& train = *prepared.train;
        const auto full = train.as_batch();
        auto x = init_params(prepared.problem, 0);
        OptimizerState st(prepared.problem.dim());
        const BatchPlan plan{32, 0, false};
        std::uint64_t t = 0;
        for (std::uint64_t epoch = 0; t < kLogregBudget && probe.logreg_steps == 0; ++epoch) {
            for (const auto& b : batches(train, plan, epoch)) {
                step(st, x, eval_loss_grad(prepared.problem, x, &b).grad, config);
                ++t;
                const double acc = accuracy(prepared.problem, x, full);
                probe.logreg_best_accuracy = std::max(probe.logreg_best_accuracy, acc);
                if (acc >= kLogregAccuracy) {
                    probe.logreg_steps = t;
                    break;
                }
                if (t == kLogregBudget) break;
            }
        }
    }
    return probe;
}

CheckResult check_convergence() {
    CheckResult r{"convergence", true, "", 0.0};
    const auto start = Clock::now();
    std::ostringstream detail;
    detail << "steps to gap<1e-6 / to 95% train acc:";
    for (const auto& row : default_rows()) {
        const auto p = probe_convergence(row.config);
        const bool ok = p.quadratic_steps > 0 && p.logreg_steps > 0;
        r.passed = r.passed && ok;
        detail << ' ' << row.label << '=' << p.quadratic_steps << '/' << p.logreg_steps;
        if (!ok) detail << "(FAIL gap " << fmt(p.quadratic_best_gap) << ", acc " << fmt(p.logreg_best_accuracy) << ')';
    }
    r.detail = detail.str();
    r.seconds = seconds_since(start);
    return r;
}

CheckResult check_protocol_reproduction() {
    CheckResult r{"protocol-reproduction", true, "", 0.0};
    const auto start = Clock::now();
    GridSpec grid;
    grid.name = "sweep-mu";
    grid.rows = default_rows();
    grid.columns = {{"blobs-mlp", default_problem("blobs-mlp")}};
    grid.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

    const auto first = run_grid(grid);
    const auto second = run_grid(grid);
    const bool same = results_to_json(grid, first, false) == results_to_json(grid, second, false);
    const auto md = emit_table(first.table, TableFormat::Markdown);

    std::size_t table_rows = 0, bold = 0, italic = 0;
    std::istringstream lines(md);
    for (std::string line; std::getline(lines, line);) {
        if (!line.starts_with("| ") || line.starts_with("| Algorithm")) continue;
        ++table_rows;
        if (line.find("**") != std::string::npos) ++bold;
        else if (line.find(" *") != std::string::npos) ++italic;
    }
    bool finite = true;
    for (const auto& row : first.table.rows) finite = finite && std::isfinite(row.cells[0].mean);

    r.seconds = seconds_since(start);
    r.passed = same && table_rows == 9 && bold == 1 && italic == 1 && finite && r.seconds < 600.0;
    r.detail = "9x1x10 grid twice: bitwise identical " + std::string(same ? "yes" : "no") +
               ", table rows " + std::to_string(table_rows) + ", best/second marks " +
               std::to_string(bold) + "/" + std::to_string(italic) + ", all cells finite " +
               (finite ? "yes" : "no") + "; " + fmt(r.seconds) + " s (limit 600 s)";
    return r;
}

CheckResult check_state_parity() {
    CheckResult r{"state-size-parity", true, "", 0.0};
    const auto start = Clock::now();
    constexpr std::size_t d = 37;
    std::ostringstream detail;
    for (const auto& row : default_rows()) {
        Optimizer opt(row.config, d);
        std::vector<double> theta(d, 0.5), g(d, 0.1);
        for (int i = 0; i < 10; ++i) opt.step(theta, g);
        const auto& st = opt.state();
        const bool ok = OptimizerState::kAuxiliaryBuffers == 2 && st.auxiliary_reals() == 2 * d &&
                        st.m().size() == d && st.v().size() == d;
        r.passed = r.passed && ok;
        if (!ok) detail << row.label << " holds " << st.auxiliary_reals() << " reals; ";
    }
    r.detail = r.passed ? "all 9 rows hold exactly 2d auxiliary reals (d = 37)" : detail.str();
    r.seconds = seconds_since(start);
    return r;
}

CheckResult check_table_fidelity() {
    CheckResult r{"table-fidelity", true, "", 0.0};
    const auto start = Clock::now();
    // Reference CIFAR-10 / ResNet-50 column.
    const std::vector<std::pair<std::string, double>> column{
        {"Adam", 12.89},           {"AdamW", 13.27},          {"AdaBelief", 12.70},
        {"AdaMomentum", 14.11},    {"AdaFamily(0.0)", 12.69}, {"AdaFamily(0.25)", 12.71},
        {"AdaFamily(0.5)", 12.65}, {"AdaFamily(0.75)", 13.79}, {"AdaFamily(1.0)", 14.56}};
    ResultTable t;
    t.columns = {"ResNet-50"};
    for (const auto& [label, value] : column) t.rows.push_back({label, {CellSummary{value, 10, 0, 0}}});
    assign_ranks(t);
    const auto md = emit_table(t, TableFormat::Markdown);
    const bool best = md.find("| AdaFamily(0.5) | **12.65** |") != std::string::npos;
    const bool second = md.find("| AdaFamily(0.0) | *12.69* |") != std::string::npos;
    std::size_t marked = 0;
    for (std::size_t pos = 0; (pos = md.find("| *", pos)) != std::string::npos; ++pos) ++marked;
    r.passed = best && second && marked == 2;
    r.detail = std::string("12.65 marked best: ") + (best ? "yes" : "no") +
               ", 12.69 marked second: " + (second ? "yes" : "no") + ", marked cells: " +
               std::to_string(marked);
    r.seconds = seconds_since(start);
    return r;
}

namespace {

struct Entry {
    CheckInfo info;
    std::function<CheckResult()> run;
};

const std::vector<Entry>& registry() {
    static const std::vector<Entry> entries{
        {{"normalization-factor", "c(0)=c(1)=1, c(0.5)=2, c(mu)=c(1-mu)"}, check_normalization_factor},
        {{"endpoint-oracles", "AdaFamily endpoints against AdaMomentum and eps-in-v oracles"}, check_endpoint_oracles},
        {{"v-lower-bound", "v >= eps (1-beta2^t)/(1-beta2) elementwise"}, check_v_lower_bound},
        {{"gradient-checks", "analytic gradients against central differences"}, check_gradients},
        {{"convergence", "quadratic and logistic-regression convergence for all 9 rows"}, check_convergence},
        {{"protocol-reproduction", "9 x blobs-mlp x 10 seed grid, reproducible table"}, check_protocol_reproduction},
        {{"state-size-parity", "exactly 2d auxiliary reals per algorithm"}, check_state_parity},
        {{"table-fidelity", "best/second-best marking on a reference ResNet-50 column"}, check_table_fidelity},
    };
    return entries;
}

} // namespace

std::vector<CheckInfo> list_checks() {
    std::vector<CheckInfo> out;
    for (const auto& e : registry()) out.push_back(e.info);
    return out;
}

std::vector<CheckResult> run_checks(std::string_view filter) {
    std::vector<CheckResult> out;
    for (const auto& e : registry()) {
        if (!filter.empty() && e.info.name.find(filter) == std::string::npos) continue;
        try {
            out.push_back(e.run());
        } catch (const std::exception& ex) {
            out.push_back({e.info.name, false, std::string("threw: ") + ex.what(), 0.0});
        }
    }
    return out;
}

} // namespace adafam::checks
