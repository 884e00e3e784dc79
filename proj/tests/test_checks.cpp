#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "adafamily/checks.hpp"
#include "adafamily/harness.hpp"
#include "adafamily/io.hpp"
#include "adafamily/table.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>

using namespace adafam;
using nlohmann::json;

TEST_CASE("adam probe matches the reference run") {
    const auto ref = json::parse(
        read_text_file(std::filesystem::path(ADAFAMILY_SOURCE_DIR) / "fixtures" / "reference_runs.json"));
    CHECK(ref["quadratic"]["budget"] == checks::kQuadraticBudget);
    CHECK(ref["quadratic"]["gap_tolerance"] == checks::kQuadraticGapTolerance);
    CHECK(ref["logreg"]["budget"] == checks::kLogregBudget);
    CHECK(ref["logreg"]["accuracy_threshold"] == checks::kLogregAccuracy);

    OptimizerConfig adam;
    adam.algorithm = Algorithm::Adam;
    const auto probe = checks::probe_convergence(adam);
    CHECK(probe.quadratic_steps == ref["quadratic"]["adam_first_step"].get<std::uint64_t>());
    CHECK(probe.logreg_steps == ref["logreg"]["adam_first_step"].get<std::uint64_t>());
}

TEST_CASE("check registry") {
    const auto all = checks::list_checks();
    CHECK(all.size() == 8);
    const auto one = checks::run_checks("state-size");
    REQUIRE(one.size() == 1);
    CHECK(one[0].passed);
    CHECK(checks::run_checks("nothing-matches").empty());
}

TEST_CASE("default blobs-mlp grid matches the smoke fixture") {
    GridSpec grid;
    grid.rows = default_rows();
    grid.columns = {{"blobs-mlp", default_problem("blobs-mlp")}};
    const auto out = run_grid(grid);
    for (const auto& row : out.table.rows) CHECK(std::isfinite(row.cells[0].mean));
    CHECK(emit_table(out.table, TableFormat::Csv) ==
          read_text_file(std::filesystem::path(ADAFAMILY_SOURCE_DIR) / "fixtures" / "blobs_mlp_default.csv"));
}
