#pragma once

#include "adafamily/harness.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace adafam {

inline constexpr int kConfigVersion = 1;
inline constexpr int kResultsVersion = 1;

// Grid configs and results files are JSON; docs/schemas.md has the schema.
// Relative csv paths in a config resolve against `base_dir`.
GridSpec parse_grid_config(std::string_view text, const std::string& source = "config",
                           const std::filesystem::path& base_dir = {});
GridSpec load_grid_config(const std::filesystem::path& path);

// Inverse of parse_grid_config, used to echo the config into results files.
std::string grid_config_to_json(const GridSpec& grid);

// Runs are written in GridOutcome order. With `include_timing` false the
// elapsed_seconds fields are written as 0, which makes the file a pure
// function of the config.
std::string results_to_json(const GridSpec& grid, const GridOutcome& outcome,
                            bool include_timing = true);

struct ResultsFile {
    std::string name;
    Metric metric = Metric::Top1Error;
    std::vector<std::string> rows;
    std::vector<std::string> columns;
    std::vector<RunRecord> runs;
};

ResultsFile parse_results(std::string_view text, const std::string& source = "results");
ResultsFile load_results(const std::filesystem::path& path);

// Rows and columns in order of first appearance across files. All files
// must share a metric.
ResultTable merge_results(const std::vector<ResultsFile>& files);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

} // namespace adafam
