#pragma once

#include "adafamily/dataset.hpp"
#include "adafamily/optim.hpp"
#include "adafamily/problems.hpp"
#include "adafamily/schedule.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adafam {

enum class Metric { Top1Error, FinalLoss };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view text);

// What to train on. `kind` is one of
//   quadratic | rosenbrock | blobs-logreg | blobs-mlp | csv-logreg | csv-mlp
// and selects which of the remaining fields are read.
struct ProblemSpec {
    std::string kind = "blobs-mlp";

    // quadratic
    std::size_t dim = 10;
    double condition = 100.0;

    // every generated problem and dataset; fixed across run seeds
    std::uint64_t data_seed = 0;

    // blobs
    std::size_t n_per_class = 150;
    std::size_t features = 2;
    int classes = 4;
    double spread = 0.25;

    // csv
    std::string path;
    bool has_header = false;
    bool scale_to_unit = false;

    // learned models
    double test_fraction = 0.2;
    std::size_t hidden = 16;

    void validate() const;
    bool operator==(const ProblemSpec&) const = default;
};

// Desk-scale defaults for the names accepted by `sweep-mu --problem`:
//   blobs-mlp     4 classes x 150 points in 2-D, spread 0.25; classes 2 and 3
//                 sit behind 0 and 1 on the same axes, so no linear separator exists
//   blobs-logreg  3 classes x 100 points in 4-D, spread 0.2
//   quadratic     d = 10, condition 100
//   rosenbrock    fixed start (-1.2, 1)
ProblemSpec default_problem(std::string_view name);

// A problem with its data generated and split.
struct PreparedProblem {
    Problem problem;
    std::optional<Dataset> train;
    std::optional<Dataset> test;
};

PreparedProblem prepare(const ProblemSpec& spec);

struct Protocol {
    std::uint64_t epochs = 30;
    std::size_t batch_size = 32;
    bool drop_last = false;
    StepSchedule schedule{{{10, 0.5}, {20, 0.5}}};
    Metric metric = Metric::Top1Error;
    // Full-objective steps per epoch for the analytic problems.
    std::uint64_t steps_per_epoch = 1;

    void validate() const;
    bool operator==(const Protocol&) const = default;
};

struct RunConfig {
    ProblemSpec problem;
    OptimizerConfig optimizer;
    Protocol protocol;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

    void validate() const;
};

// Training trace of one (config, seed). Top-1 error is in percent. The
// FinalLoss metric is the test-split loss for learned models and the gap
// f(theta) - f* for analytic ones. Metrics are taken on the test split, or
// on the training split when the test split is empty. A divergent run stops
// at the first non-finite loss, gradient or parameter; its traces end before
// `divergent_epoch`.
struct RunResult {
    std::uint64_t seed = 0;
    std::vector<double> train_loss;
    std::vector<double> eval_metric;
    std::vector<double> lr_scale;
    double final_metric = 0.0;
    std::uint64_t steps = 0;
    bool divergent = false;
    std::optional<std::uint64_t> divergent_epoch;
    double elapsed_seconds = 0.0;
};

RunResult run_single(const RunConfig& config, std::uint64_t seed);
RunResult run_prepared(const PreparedProblem& prepared, const OptimizerConfig& optimizer,
                       const Protocol& protocol, std::uint64_t seed);

// Grid over optimizers (rows) and problems (columns).
struct OptimizerRow {
    std::string label;
    OptimizerConfig config;
};

struct ProblemColumn {
    std::string label;
    ProblemSpec spec;
};

// Shortest decimal form of mu with at least one fractional digit: 0.0, 0.25, 1.0.
std::string format_mu(double mu);

// "AdaFamily(0.25)" for AdaFamily, the algorithm's display name otherwise.
std::string row_label(const OptimizerConfig& config);

// Shared hyperparameters of the default grid: alpha 1e-3, betas 0.9/0.999,
// epsilon 1e-8, weight decay 1e-4 (coupled for Adam, decoupled for the rest).
OptimizerConfig default_optimizer(Algorithm algorithm, double mu = 0.0);

inline const std::vector<double> kDefaultMus{0.0, 0.25, 0.5, 0.75, 1.0};

// Adam, AdamW, AdaBelief, AdaMomentum, then one AdaFamily row per mu.
std::vector<OptimizerRow> default_rows(const std::vector<double>& mus = kDefaultMus);

struct GridSpec {
    std::string name = "grid";
    std::vector<OptimizerRow> rows;
    std::vector<ProblemColumn> columns;
    Protocol protocol;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    unsigned threads = 0;  // 0: hardware concurrency

    void validate() const;
};

struct RunRecord {
    std::string row;
    std::string column;
    RunResult result;
};

struct CellSummary {
    double mean = 0.0;  // NaN when every run diverged
    std::size_t runs = 0;
    std::size_t divergent = 0;
    std::size_t rank = 0;  // 1-based within the column
};

struct AggregateResult {
    std::string label;
    std::vector<CellSummary> cells;  // one per column
};

struct ResultTable {
    Metric metric = Metric::Top1Error;
    std::vector<std::string> columns;
    std::vector<AggregateResult> rows;
};

// Mean over non-divergent runs per (row, column); rows and columns keep the
// given order. Ranks sort each column by mean ascending, ties by row order,
// all-divergent cells last. Throws ConfigError for runs naming an unknown
// row/column or a duplicated (row, column, seed).
ResultTable aggregate(const std::vector<std::string>& rows,
                      const std::vector<std::string>& columns,
                      const std::vector<RunRecord>& runs, Metric metric);

// Recomputes ranks from the means, as aggregate() does.
void assign_ranks(ResultTable& table);

struct GridOutcome {
    ResultTable table;
    std::vector<RunRecord> runs;  // ordered by (row, column, seed position)
};

// Cells run concurrently; the outcome does not depend on scheduling.
GridOutcome run_grid(const GridSpec& grid);

} // namespace adafam
