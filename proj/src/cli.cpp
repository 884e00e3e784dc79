#include "adafamily/cli.hpp"

#include "adafamily/checks.hpp"
#include "adafamily/error.hpp"
#include "adafamily/harness.hpp"
#include "adafamily/io.hpp"
#include "adafamily/table.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <ostream>

namespace adafam {

namespace {

std::filesystem::path default_out_dir() {
    const char* env = std::getenv(kOutDirEnv);
    return env != nullptr && *env != '\0' ? std::filesystem::path(env) : std::filesystem::path("results");
}

std::vector<double> parse_mu_list(const std::string& text) {
    std::vector<double> mus;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find(',', start);
        if (end == std::string::npos) end = text.size();
        const std::string item = text.substr(start, end - start);
        double mu = 0.0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), mu);
        if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size()) {
            throw ConfigError("--mus: '" + item + "' is not a number");
        }
        normalization_factor(mu);  // range check
        mus.push_back(mu);
        start = end + 1;
    }
    return mus;
}

// Schedule values are asserted against the closed form before anything is written.
void verify_schedules(const GridSpec& grid, const GridOutcome& outcome) {
    for (const auto& rec : outcome.runs) {
        for (std::size_t e = 0; e < rec.result.lr_scale.size(); ++e) {
            if (rec.result.lr_scale[e] != grid.protocol.schedule.scale_at(e)) {
                throw Error("schedule mismatch in " + rec.row + " / " + rec.column + " epoch " +
                            std::to_string(e));
            }
        }
    }
}

void execute_grid(const GridSpec& grid, const std::filesystem::path& out_dir, TableFormat format,
                  std::ostream& out, std::ostream& err) {
    const auto outcome = run_grid(grid);
    verify_schedules(grid, outcome);
    const auto path = out_dir / (grid.name + ".json");
    write_text_file(path, results_to_json(grid, outcome));

    std::size_t divergent = 0;
    for (const auto& rec : outcome.runs) divergent += rec.result.divergent ? 1 : 0;
    err << "wrote " << path.string() << " (" << outcome.runs.size() << " runs, " << divergent
        << " divergent)\n";
    out << emit_table(outcome.table, format);
}

} // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"AdaFamily optimizer benchmark harness", "adafam"};
    app.require_subcommand(1);

    std::string config_path, out_dir_text, format_text = "md", mus_text = "0,0.25,0.5,0.75,1.0";
    std::string problem_name = "blobs-mlp", filter;
    std::vector<std::string> result_files;
    std::size_t seed_count = 10;
    unsigned threads = 0;
    std::uint64_t epochs = 0;
    bool list = false;

    auto* run = app.add_subcommand("run", "Execute a grid config file and write a results file");
    run->add_option("--config", config_path, "Grid config (JSON)")->required();
    run->add_option("--out", out_dir_text, "Output directory (default $ADAFAMILY_OUT_DIR or ./results)");
    run->add_option("--format", format_text, "Table printed to stdout: md or csv");
    run->add_option("--threads", threads, "Worker threads (0: all cores)");

    auto* sweep = app.add_subcommand("sweep-mu", "Baselines plus an AdaFamily row per mu on one problem");
    sweep->add_option("--mus", mus_text, "Comma-separated mu values");
    sweep->add_option("--problem", problem_name, "quadratic | rosenbrock | blobs-logreg | blobs-mlp");
    sweep->add_option("--seeds", seed_count, "Number of seeds (0..N-1)")->check(CLI::PositiveNumber);
    sweep->add_option("--epochs", epochs, "Override the 30-epoch protocol; milestones scale along");
    sweep->add_option("--out", out_dir_text, "Output directory (default $ADAFAMILY_OUT_DIR or ./results)");
    sweep->add_option("--format", format_text, "Table printed to stdout: md or csv");
    sweep->add_option("--threads", threads, "Worker threads (0: all cores)");

    auto* table = app.add_subcommand("table", "Aggregate results files into a table");
    table->add_option("--format", format_text, "md or csv");
    table->add_option("files", result_files, "Results files")->required();

    auto* check = app.add_subcommand("check", "Run the invariant and oracle suite");
    check->add_option("--filter", filter, "Only checks whose name contains this text");
    check->add_flag("--list", list, "List checks and exit");

    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "adafam: " << e.what() << "\n";
        return 2;
    }

    try {
        const auto format = parse_table_format(format_text);
        const auto out_dir = out_dir_text.empty() ? default_out_dir() : std::filesystem::path(out_dir_text);

        if (*run) {
            if (!std::filesystem::exists(config_path)) {
                throw ConfigError("config file not found: " + config_path);
            }
            auto grid = load_grid_config(config_path);
            if (threads != 0) grid.threads = threads;
            execute_grid(grid, out_dir, format, out, err);
        } else if (*sweep) {
            GridSpec grid;
            grid.rows = default_rows(parse_mu_list(mus_text));
            grid.columns = {{problem_name, default_problem(problem_name)}};
            grid.seeds.clear();
            for (std::size_t s = 0; s < seed_count; ++s) grid.seeds.push_back(s);
            grid.threads = threads;
            if (grid.columns[0].spec.kind == "quadratic" || grid.columns[0].spec.kind == "rosenbrock") {
                grid.protocol.metric = Metric::FinalLoss;
            }
            if (epochs != 0 && epochs != grid.protocol.epochs) {
                // Keep the decay points at one and two thirds of training.
                std::vector<Milestone> ms;
                for (std::uint64_t e : {epochs / 3, 2 * epochs / 3}) {
                    if (e > 0 && (ms.empty() || ms.back().epoch < e)) ms.push_back({e, 0.5});
                }
                grid.protocol.epochs = epochs;
                grid.protocol.schedule = StepSchedule(ms);
            }
            grid.name = "sweep-mu-" + problem_name;
            execute_grid(grid, out_dir, format, out, err);
        } else if (*table) {
            std::vector<ResultsFile> files;
            for (const auto& f : result_files) files.push_back(load_results(f));
            out << emit_table(merge_results(files), format);
        } else if (*check) {
            if (list) {
                for (const auto& c : checks::list_checks()) out << c.name << "  " << c.description << "\n";
                return 0;
            }
            const auto results = checks::run_checks(filter);
            if (results.empty()) throw ConfigError("no check matches '" + filter + "'");
            bool all = true;
            for (const auto& r : results) {
                out << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
                all = all && r.passed;
            }
            return all ? 0 : 1;
        }
    } catch (const std::exception& e) {
        err << "adafam: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace adafam
