#include "adafamily/harness.hpp"

#include "adafamily/error.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>
#include <tuple>

namespace adafam {

std::string_view to_string(Metric metric) {
    return metric == Metric::Top1Error ? "top1_error" : "final_loss";
}

Metric parse_metric(std::string_view text) {
    if (text == "top1_error") return Metric::Top1Error;
    if (text == "final_loss") return Metric::FinalLoss;
    throw ConfigError("unknown metric '" + std::string(text) + "'");
}

namespace {

bool is_learned(std::string_view kind) {
    return kind == "blobs-logreg" || kind == "blobs-mlp" || kind == "csv-logreg" ||
           kind == "csv-mlp";
}

} // namespace

void ProblemSpec::validate() const {
    const bool known = kind == "quadratic" || kind == "rosenbrock" || is_learned(kind);
    if (!known) throw ConfigError("unknown problem kind '" + kind + "'");
    if (kind == "quadratic" && (dim < 1 || !(condition >= 1.0))) {
        throw ConfigError("quadratic needs dim >= 1 and condition >= 1");
    }
    if (kind.starts_with("blobs") &&
        (n_per_class < 1 || features < 1 || classes < 2 || !(spread > 0.0))) {
        throw ConfigError("blobs need n_per_class >= 1, features >= 1, classes >= 2, spread > 0");
    }
    if (kind.starts_with("csv") && path.empty()) throw ConfigError("csv problem needs a path");
    if (is_learned(kind) && !(test_fraction >= 0.0 && test_fraction < 1.0)) {
        throw ConfigError("test_fraction must lie in [0, 1)");
    }
    if (kind.ends_with("mlp") && hidden < 1) throw ConfigError("mlp needs hidden >= 1");
}

ProblemSpec default_problem(std::string_view name) {
    ProblemSpec spec;
    spec.kind = std::string(name);
    if (name == "blobs-logreg") {
        spec.n_per_class = 100;
        spec.features = 4;
        spec.classes = 3;
        spec.spread = 0.2;
    }
    if (name.starts_with("csv")) {
        throw ConfigError("csv problems need a config file with a path");
    }
    spec.validate();
    return spec;
}

PreparedProblem prepare(const ProblemSpec& spec) {
    spec.validate();
    if (spec.kind == "quadratic") {
        return {make_random_quadratic(spec.dim, spec.condition, spec.data_seed), {}, {}};
    }
    if (spec.kind == "rosenbrock") return {Problem::rosenbrock(), {}, {}};

    Dataset data = spec.kind.starts_with("blobs")
                       ? gen_gaussian_blobs(spec.data_seed, spec.n_per_class, spec.features,
                                            spec.classes, spec.spread)
                       : load_csv_dataset(spec.path, spec.classes,
                                          CsvOptions{spec.has_header, spec.scale_to_unit});
    auto [train, test] = split(data, spec.test_fraction, spec.data_seed);
    Problem problem = spec.kind.ends_with("mlp")
                          ? Problem::mlp1(data.num_features(), spec.hidden, data.num_classes)
                          : Problem::logistic_regression(data.num_features(), data.num_classes);
    return {std::move(problem), std::move(train), std::move(test)};
}

void Protocol::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (steps_per_epoch < 1) throw ConfigError("steps_per_epoch must be at least 1");
    schedule.validate(epochs);
}

void RunConfig::validate() const {
    problem.validate();
    optimizer.validate();
    protocol.validate();
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (protocol.metric == Metric::Top1Error && !is_learned(problem.kind)) {
        throw ConfigError("top1_error needs a classification problem");
    }
}

RunResult run_prepared(const PreparedProblem& prepared, const OptimizerConfig& optimizer,
                       const Protocol& protocol, std::uint64_t seed) {
    protocol.validate();
    const Problem& problem = prepared.problem;
    const bool learned = problem.needs_batch();
    if (learned && !(prepared.train && prepared.test)) {
        throw ConfigError("learned problem is missing its data splits");
    }
    if (!learned && protocol.metric == Metric::Top1Error) {
        throw ConfigError("top1_error needs a classification problem");
    }

    const auto start = std::chrono::steady_clock::now();
    RunResult result;
    result.seed = seed;

    std::vector<double> params = init_params(problem, seed);
    Optimizer opt(optimizer, problem.dim());

    std::optional<Batch> eval_batch;
    if (learned) {
        eval_batch = prepared.test->size() > 0 ? prepared.test->as_batch()
                                               : prepared.train->as_batch();
    }
    const double optimum = learned ? 0.0 : problem.analytic_minimum();
    const BatchPlan plan{protocol.batch_size, seed, protocol.drop_last};

    // Returns false when the run has diverged.
    auto train_step = [&](const Batch* batch, double scale, double& loss_sum,
                          std::size_t weight) {
        LossGrad lg = eval_loss_grad(problem, params, batch);
        if (!std::isfinite(lg.loss)) return false;
        try {
            opt.step(params, lg.grad, scale);
        } catch (const NumericError&) {
            return false;
        }
        loss_sum += lg.loss * static_cast<double>(weight);
        ++result.steps;
        return true;
    };

    for (std::uint64_t epoch = 0; epoch < protocol.epochs; ++epoch) {
        const double scale = protocol.schedule.scale_at(epoch);
        double loss_sum = 0.0;
        std::size_t count = 0;
        bool ok = true;
        if (learned) {
            for (const Batch& b : batches(*prepared.train, plan, epoch)) {
                if (!(ok = train_step(&b, scale, loss_sum, b.size()))) break;
                count += b.size();
            }
        } else {
            for (std::uint64_t s = 0; s < protocol.steps_per_epoch && ok; ++s) {
                ok = train_step(nullptr, scale, loss_sum, 1);
                count += ok ? 1 : 0;
            }
        }

        double metric = std::numeric_limits<double>::quiet_NaN();
        if (ok) {
            if (!learned) {
                metric = eval_loss(problem, params) - optimum;
            } else if (protocol.metric == Metric::Top1Error) {
                metric = 100.0 * (1.0 - accuracy(problem, params, *eval_batch));
            } else {
                metric = eval_loss(problem, params, &*eval_batch);
            }
            // A NaN parameter makes every logit NaN, which argmax maps to class 0.
            ok = std::isfinite(metric) &&
                 std::all_of(params.begin(), params.end(), [](double x) { return std::isfinite(x); });
        }
        if (!ok) {
            result.divergent = true;
            result.divergent_epoch = epoch;
            break;
        }
        result.train_loss.push_back(loss_sum / static_cast<double>(count));
        result.eval_metric.push_back(metric);
        result.lr_scale.push_back(scale);
    }

    result.final_metric = result.divergent ? std::numeric_limits<double>::quiet_NaN()
                                           : result.eval_metric.back();
    result.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

RunResult run_single(const RunConfig& config, std::uint64_t seed) {
    config.validate();
    return run_prepared(prepare(config.problem), config.optimizer, config.protocol, seed);
}

std::string format_mu(double mu) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, mu);
    std::string out(buf, ptr);
    if (out.find_first_of(".e") == std::string::npos) out += ".0";
    return out;
}

std::string row_label(const OptimizerConfig& config) {
    switch (config.algorithm) {
    case Algorithm::AdaFamily: return "AdaFamily(" + format_mu(config.mu) + ")";
    case Algorithm::Adam: return "Adam";
    case Algorithm::AdamW: return "AdamW";
    case Algorithm::AdaBelief: return "AdaBelief";
    case Algorithm::AdaMomentum: return "AdaMomentum";
    }
    return "?";
}

OptimizerConfig default_optimizer(Algorithm algorithm, double mu) {
    OptimizerConfig c;
    c.algorithm = algorithm;
    c.mu = mu;
    c.alpha = 1e-3;
    c.beta1 = 0.9;
    c.beta2 = 0.999;
    c.epsilon = 1e-8;
    c.weight_decay = 1e-4;
    c.decay_mode = algorithm == Algorithm::Adam ? DecayMode::Coupled : DecayMode::Decoupled;
    return c;
}

std::vector<OptimizerRow> default_rows(const std::vector<double>& mus) {
    std::vector<OptimizerRow> rows;
    for (auto a : {Algorithm::Adam, Algorithm::AdamW, Algorithm::AdaBelief, Algorithm::AdaMomentum}) {
        auto cfg = default_optimizer(a);
        rows.push_back({row_label(cfg), cfg});
    }
    for (double mu : mus) {
        auto cfg = default_optimizer(Algorithm::AdaFamily, mu);
        rows.push_back({row_label(cfg), cfg});
    }
    return rows;
}

void GridSpec::validate() const {
    if (rows.empty()) throw ConfigError("grid has no optimizer rows");
    if (columns.empty()) throw ConfigError("grid has no problem columns");
    if (seeds.empty()) throw ConfigError("grid has no seeds");
    protocol.validate();
    auto unique = [](auto labels) {
        std::sort(labels.begin(), labels.end());
        return std::adjacent_find(labels.begin(), labels.end()) == labels.end();
    };
    std::vector<std::string> rl, cl;
    for (const auto& r : rows) {
        r.config.validate();
        rl.push_back(r.label);
    }
    for (const auto& c : columns) {
        c.spec.validate();
        if (protocol.metric == Metric::Top1Error && !is_learned(c.spec.kind)) {
            throw ConfigError("column '" + c.label + "': top1_error needs a classification problem");
        }
        cl.push_back(c.label);
    }
    if (!unique(rl)) throw ConfigError("optimizer row labels must be unique");
    if (!unique(cl)) throw ConfigError("problem column labels must be unique");
    if (!unique(seeds)) throw ConfigError("seeds must be unique");
}

void assign_ranks(ResultTable& table) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        std::vector<std::size_t> order(table.rows.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double ma = table.rows[a].cells[c].mean;
            const double mb = table.rows[b].cells[c].mean;
            if (std::isnan(ma) || std::isnan(mb)) return !std::isnan(ma) && std::isnan(mb);
            return ma < mb;
        });
        for (std::size_t r = 0; r < order.size(); ++r) table.rows[order[r]].cells[c].rank = r + 1;
    }
}

ResultTable aggregate(const std::vector<std::string>& rows,
                      const std::vector<std::string>& columns,
                      const std::vector<RunRecord>& runs, Metric metric) {
    auto index_of = [](const std::vector<std::string>& labels, const std::string& label,
                       const char* what) {
        auto it = std::find(labels.begin(), labels.end(), label);
        if (it == labels.end()) throw ConfigError(std::string("run names unknown ") + what + " '" + label + "'");
        return static_cast<std::size_t>(it - labels.begin());
    };

    ResultTable table;
    table.metric = metric;
    table.columns = columns;
    for (const auto& r : rows) table.rows.push_back({r, std::vector<CellSummary>(columns.size())});

    std::vector<std::vector<double>> sums(rows.size(), std::vector<double>(columns.size(), 0.0));
    std::map<std::tuple<std::size_t, std::size_t, std::uint64_t>, bool> seen;
    for (const auto& run : runs) {
        const auto r = index_of(rows, run.row, "row");
        const auto c = index_of(columns, run.column, "column");
        if (!seen.emplace(std::tuple{r, c, run.result.seed}, true).second) {
            throw ConfigError("duplicate run for " + run.row + " / " + run.column + " seed " +
                              std::to_string(run.result.seed));
        }
        auto& cell = table.rows[r].cells[c];
        ++cell.runs;
        if (run.result.divergent || !std::isfinite(run.result.final_metric)) {
            ++cell.divergent;
        } else {
            sums[r][c] += run.result.final_metric;
        }
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            auto& cell = table.rows[r].cells[c];
            const std::size_t ok = cell.runs - cell.divergent;
            cell.mean = ok > 0 ? sums[r][c] / static_cast<double>(ok)
                               : std::numeric_limits<double>::quiet_NaN();
        }
    }
    assign_ranks(table);
    return table;
}

GridOutcome run_grid(const GridSpec& grid) {
    grid.validate();

    std::vector<PreparedProblem> prepared;
    prepared.reserve(grid.columns.size());
    for (const auto& col : grid.columns) prepared.push_back(prepare(col.spec));

    const std::size_t n_seeds = grid.seeds.size();
    const std::size_t n_cols = grid.columns.size();
    const std::size_t n_tasks = grid.rows.size() * n_cols * n_seeds;
    std::vector<RunRecord> records(n_tasks);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t task = next++; task < n_tasks; task = next++) {
            const std::size_t r = task / (n_cols * n_seeds);
            const std::size_t c = (task / n_seeds) % n_cols;
            const std::size_t s = task % n_seeds;
            try {
                records[task] = {grid.rows[r].label, grid.columns[c].label,
                                 run_prepared(prepared[c], grid.rows[r].config, grid.protocol,
                                              grid.seeds[s])};
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };

    unsigned threads = grid.threads != 0 ? grid.threads : std::thread::hardware_concurrency();
    threads = static_cast<unsigned>(std::clamp<std::size_t>(threads, 1, n_tasks));
    {
        std::vector<std::jthread> pool;
        for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
        worker();
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<std::string> row_labels, col_labels;
    for (const auto& r : grid.rows) row_labels.push_back(r.label);
    for (const auto& c : grid.columns) col_labels.push_back(c.label);
    GridOutcome out{aggregate(row_labels, col_labels, records, grid.protocol.metric),
                    std::move(records)};
    return out;
}

} // namespace adafam
