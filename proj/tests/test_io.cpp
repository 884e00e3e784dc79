#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "adafamily/error.hpp"
#include "adafamily/io.hpp"

#include <cmath>
#include <filesystem>

using namespace adafam;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"({
  "version": 1,
  "name": "small",
  "threads": 2,
  "protocol": {"epochs": 2, "batch_size": 16, "metric": "final_loss", "schedule": [[1, 0.5]]},
  "seeds": 2,
  "problems": [
    {"kind": "quadratic", "dim": 4, "condition": 10},
    {"kind": "blobs-logreg", "label": "logreg", "n_per_class": 10}
  ],
  "optimizers": [
    {"algorithm": "adam", "decay_mode": "coupled", "weight_decay": 0.001},
    {"algorithm": "adafamily", "mu": 0.25, "label": "fam"}
  ]
})";

std::string message_of(std::string_view text) {
    try {
        parse_grid_config(text);
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("config parses") {
    const auto g = parse_grid_config(kSmall);
    CHECK(g.name == "small");
    CHECK(g.threads == 2);
    CHECK(g.protocol.epochs == 2);
    CHECK(g.protocol.batch_size == 16);
    CHECK(g.protocol.metric == Metric::FinalLoss);
    CHECK(g.protocol.schedule.milestones() == std::vector<Milestone>{{1, 0.5}});
    CHECK(g.seeds == std::vector<std::uint64_t>{0, 1});
    REQUIRE(g.columns.size() == 2);
    CHECK(g.columns[0].label == "quadratic");
    CHECK(g.columns[0].spec.dim == 4);
    CHECK(g.columns[1].label == "logreg");
    CHECK(g.columns[1].spec.n_per_class == 10);
    REQUIRE(g.rows.size() == 2);
    CHECK(g.rows[0].label == "Adam");
    CHECK(g.rows[0].config.decay_mode == DecayMode::Coupled);
    CHECK(g.rows[0].config.weight_decay == 0.001);
    CHECK(g.rows[1].label == "fam");
    CHECK(g.rows[1].config.mu == 0.25);
}

TEST_CASE("default optimizers and mus") {
    const auto g = parse_grid_config(R"({"version": 1, "problems": [{"kind": "blobs-mlp"}], "mus": [0.1]})");
    REQUIRE(g.rows.size() == 5);
    CHECK(g.rows[4].label == "AdaFamily(0.1)");
    CHECK(g.seeds.size() == 10);
}

TEST_CASE("config round trip") {
    const auto g = parse_grid_config(kSmall);
    const auto again = parse_grid_config(grid_config_to_json(g));
    CHECK(again.name == g.name);
    CHECK(again.protocol == g.protocol);
    CHECK(again.seeds == g.seeds);
    REQUIRE(again.rows.size() == g.rows.size());
    for (std::size_t i = 0; i < g.rows.size(); ++i) {
        CHECK(again.rows[i].label == g.rows[i].label);
        CHECK(again.rows[i].config == g.rows[i].config);
    }
    for (std::size_t i = 0; i < g.columns.size(); ++i) CHECK(again.columns[i].spec == g.columns[i].spec);
}

TEST_CASE("config errors") {
    CHECK(message_of("{").find("JSON") != std::string::npos);
    CHECK(message_of(R"({"version": 2, "problems": [{"kind": "quadratic"}]})") != "");
    CHECK(message_of(R"({"version": 1})") != "");
    CHECK(message_of(R"({"version": 1, "problems": [{"kind": "quadratic"}], "bogus": 1})").find("bogus") !=
          std::string::npos);
    CHECK(message_of(R"({"version": 1, "problems": [{"kind": "quadratic", "dimm": 3}]})").find("dimm") !=
          std::string::npos);
    CHECK(message_of(R"({"version": 1, "problems": [{"kind": "nope"}]})") != "");
    CHECK(message_of(R"({"version": 1, "problems": [{"kind": "blobs-mlp"}],
                         "optimizers": [{"algorithm": "adamw", "decay_mode": "coupled", "weight_decay": 0.1}]})") != "");
    CHECK(message_of(R"({"version": 1, "problems": [{"kind": "blobs-mlp"}],
                         "optimizers": [{"algorithm": "adafamily", "mu": 1.5}]})") != "");
    CHECK(message_of(R"({"version": 1, "problems": [{"kind": "blobs-mlp"}], "protocol": {"epochs": "ten"}})") != "");
    CHECK(message_of(R"({"version": 1, "problems": [{"kind": "blobs-mlp"}], "mus": [0.5],
                         "optimizers": [{"algorithm": "adam"}]})") != "");
}

TEST_CASE("csv paths resolve against the config directory") {
    const auto g = parse_grid_config(
        R"({"version": 1, "problems": [{"kind": "csv-logreg", "path": "three_rows.csv", "classes": 3}]})", "cfg",
        fs::path("/some/dir"));
    CHECK(fs::path(g.columns[0].spec.path) == fs::path("/some/dir/three_rows.csv"));
}

TEST_CASE("results round trip") {
    auto g = parse_grid_config(kSmall);
    g.threads = 1;
    const auto out = run_grid(g);
    const auto text = results_to_json(g, out, false);
    const auto file = parse_results(text);
    CHECK(file.name == "small");
    CHECK(file.metric == Metric::FinalLoss);
    CHECK(file.rows == std::vector<std::string>{"Adam", "fam"});
    CHECK(file.columns == std::vector<std::string>{"quadratic", "logreg"});
    REQUIRE(file.runs.size() == out.runs.size());
    for (std::size_t i = 0; i < out.runs.size(); ++i) {
        CHECK(file.runs[i].row == out.runs[i].row);
        CHECK(file.runs[i].result.final_metric == out.runs[i].result.final_metric);
        CHECK(file.runs[i].result.train_loss == out.runs[i].result.train_loss);
        CHECK(file.runs[i].result.elapsed_seconds == 0.0);
    }
    const auto merged = merge_results({file});
    for (std::size_t r = 0; r < merged.rows.size(); ++r)
        for (std::size_t c = 0; c < merged.columns.size(); ++c)
            CHECK(merged.rows[r].cells[c].mean == out.table.rows[r].cells[c].mean);
    CHECK(results_to_json(g, run_grid(g), false) == text);
}

TEST_CASE("merging files") {
    auto g = parse_grid_config(kSmall);
    const auto a = parse_results(results_to_json(g, run_grid(g), false));
    auto b = a;
    for (auto& run : b.runs) run.column += "-copy";
    for (auto& c : b.columns) c += "-copy";
    const auto merged = merge_results({a, b});
    CHECK(merged.columns.size() == 4);
    CHECK_THROWS_AS(merge_results({a, a}), ConfigError);
    auto c = a;
    c.metric = Metric::Top1Error;
    for (auto& run : c.runs) run.column += "-x";
    for (auto& col : c.columns) col += "-x";
    CHECK_THROWS_AS(merge_results({a, c}), ConfigError);
}

TEST_CASE("results format errors") {
    CHECK_THROWS_AS(parse_results("[]"), Error);
    CHECK_THROWS_AS(parse_results(R"({"format": "other", "version": 1})"), Error);
    CHECK_THROWS_AS(load_results("/nonexistent/results.json"), Error);
}
