#include "adafamily/io.hpp"

#include "adafamily/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace adafam {

using nlohmann::json;

namespace {

// Reads an object's keys strictly: every key must be consumed by a get()
// call before finish(), otherwise the unknown keys are reported.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string where, const std::string& source)
        : j_(j), where_(std::move(where)), source_(source) {
        if (!j.is_object()) fail("expected an object");
    }

    template <class T>
    T get(const char* key, T fallback) {
        used_.insert(key);
        if (!j_.contains(key)) return fallback;
        return convert<T>(j_.at(key), key);
    }

    template <class T>
    T require(const char* key) {
        used_.insert(key);
        if (!j_.contains(key)) fail(std::string("missing key '") + key + "'");
        return convert<T>(j_.at(key), key);
    }

    bool has(const char* key) const { return j_.contains(key); }
    const json& raw(const char* key) {
        used_.insert(key);
        if (!j_.contains(key)) fail(std::string("missing key '") + key + "'");
        return j_.at(key);
    }

    void finish() const {
        for (const auto& [key, _] : j_.items()) {
            if (!used_.contains(key)) fail("unknown key '" + key + "'");
        }
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(source_, 0, where_ + ": " + what);
    }

private:
    template <class T>
    T convert(const json& value, const char* key) const {
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!value.is_number()) throw std::invalid_argument("not a number");
            } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
                if (!value.is_number_integer() || (std::is_unsigned_v<T> && value.get<long long>() < 0)) {
                    throw std::invalid_argument("not a non-negative integer");
                }
            }
            return value.get<T>();
        } catch (const std::exception& e) {
            fail(std::string("key '") + key + "': " + e.what());
        }
    }

    const json& j_;
    std::string where_;
    const std::string& source_;
    std::set<std::string> used_;
};

OptimizerConfig parse_optimizer(const json& j, const std::string& where, const std::string& source,
                                std::string& label) {
    ObjectReader r(j, where, source);
    const auto algorithm = parse_algorithm(r.require<std::string>("algorithm"));
    OptimizerConfig cfg = default_optimizer(algorithm, r.get<double>("mu", 0.0));
    cfg.alpha = r.get<double>("alpha", cfg.alpha);
    cfg.beta1 = r.get<double>("beta1", cfg.beta1);
    cfg.beta2 = r.get<double>("beta2", cfg.beta2);
    cfg.epsilon = r.get<double>("epsilon", cfg.epsilon);
    cfg.weight_decay = r.get<double>("weight_decay", cfg.weight_decay);
    if (r.has("decay_mode")) cfg.decay_mode = parse_decay_mode(r.get<std::string>("decay_mode", ""));
    label = r.get<std::string>("label", row_label(cfg));
    r.finish();
    return cfg;
}

json optimizer_to_json(const OptimizerRow& row) {
    const auto& c = row.config;
    json j{{"label", row.label},
           {"algorithm", to_string(c.algorithm)},
           {"alpha", c.alpha},
           {"beta1", c.beta1},
           {"beta2", c.beta2},
           {"epsilon", c.epsilon},
           {"weight_decay", c.weight_decay},
           {"decay_mode", to_string(c.decay_mode)}};
    if (c.algorithm == Algorithm::AdaFamily) j["mu"] = c.mu;
    return j;
}

ProblemSpec parse_problem(const json& j, const std::string& where, const std::string& source,
                          const std::filesystem::path& base_dir, std::string& label) {
    ObjectReader r(j, where, source);
    const auto kind = r.require<std::string>("kind");
    ProblemSpec spec;
    try {
        spec = kind.starts_with("csv") ? ProblemSpec{} : default_problem(kind);
    } catch (const ConfigError& e) {
        r.fail(e.what());
    }
    spec.kind = kind;
    spec.dim = r.get<std::size_t>("dim", spec.dim);
    spec.condition = r.get<double>("condition", spec.condition);
    spec.data_seed = r.get<std::uint64_t>("data_seed", spec.data_seed);
    spec.n_per_class = r.get<std::size_t>("n_per_class", spec.n_per_class);
    spec.features = r.get<std::size_t>("features", spec.features);
    spec.classes = r.get<int>("classes", spec.classes);
    spec.spread = r.get<double>("spread", spec.spread);
    spec.path = r.get<std::string>("path", spec.path);
    if (!spec.path.empty() && std::filesystem::path(spec.path).is_relative() && !base_dir.empty()) {
        spec.path = (base_dir / spec.path).lexically_normal().string();
    }
    spec.has_header = r.get<bool>("has_header", spec.has_header);
    spec.scale_to_unit = r.get<bool>("scale_to_unit", spec.scale_to_unit);
    spec.test_fraction = r.get<double>("test_fraction", spec.test_fraction);
    spec.hidden = r.get<std::size_t>("hidden", spec.hidden);
    label = r.get<std::string>("label", kind);
    r.finish();
    return spec;
}

json problem_to_json(const ProblemColumn& col) {
    const auto& s = col.spec;
    json j{{"label", col.label}, {"kind", s.kind}, {"data_seed", s.data_seed}};
    if (s.kind == "quadratic") {
        j["dim"] = s.dim;
        j["condition"] = s.condition;
    }
    if (s.kind.starts_with("blobs")) {
        j["n_per_class"] = s.n_per_class;
        j["features"] = s.features;
        j["classes"] = s.classes;
        j["spread"] = s.spread;
    }
    if (s.kind.starts_with("csv")) {
        j["path"] = s.path;
        j["classes"] = s.classes;
        j["has_header"] = s.has_header;
        j["scale_to_unit"] = s.scale_to_unit;
    }
    if (s.kind.ends_with("logreg") || s.kind.ends_with("mlp")) j["test_fraction"] = s.test_fraction;
    if (s.kind.ends_with("mlp")) j["hidden"] = s.hidden;
    return j;
}

Protocol parse_protocol(const json& j, const std::string& source) {
    ObjectReader r(j, "protocol", source);
    Protocol p;
    p.epochs = r.get<std::uint64_t>("epochs", p.epochs);
    p.batch_size = r.get<std::size_t>("batch_size", p.batch_size);
    p.drop_last = r.get<bool>("drop_last", p.drop_last);
    p.steps_per_epoch = r.get<std::uint64_t>("steps_per_epoch", p.steps_per_epoch);
    p.metric = parse_metric(r.get<std::string>("metric", std::string(to_string(p.metric))));
    if (r.has("schedule")) {
        const json& s = r.raw("schedule");
        if (!s.is_array()) r.fail("schedule must be a list of [epoch, factor] pairs");
        std::vector<Milestone> ms;
        for (const auto& item : s) {
            if (!item.is_array() || item.size() != 2 || !item[0].is_number_unsigned() ||
                !item[1].is_number()) {
                r.fail("schedule entries must be [epoch, factor]");
            }
            ms.push_back({item[0].get<std::uint64_t>(), item[1].get<double>()});
        }
        p.schedule = StepSchedule(std::move(ms));
    }
    r.finish();
    return p;
}

json protocol_to_json(const Protocol& p) {
    json schedule = json::array();
    for (const auto& ms : p.schedule.milestones()) schedule.push_back({ms.epoch, ms.factor});
    return {{"epochs", p.epochs},
            {"batch_size", p.batch_size},
            {"drop_last", p.drop_last},
            {"steps_per_epoch", p.steps_per_epoch},
            {"metric", to_string(p.metric)},
            {"schedule", schedule}};
}

json parse_json(std::string_view text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(source, 0, std::string("invalid JSON: ") + e.what());
    }
}

void check_version(ObjectReader& r, const char* key, int expected) {
    const int version = r.require<int>(key);
    if (version != expected) {
        r.fail("unsupported version " + std::to_string(version) + " (expected " +
               std::to_string(expected) + ")");
    }
}

// JSON has no NaN; non-finite metrics are written as null.
json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double number_from(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

} // namespace

GridSpec parse_grid_config(std::string_view text, const std::string& source,
                           const std::filesystem::path& base_dir) {
    const json root = parse_json(text, source);
    ObjectReader r(root, "config", source);
    check_version(r, "version", kConfigVersion);

    GridSpec grid;
    grid.name = r.get<std::string>("name", grid.name);
    grid.threads = r.get<unsigned>("threads", 0);
    if (r.has("protocol")) grid.protocol = parse_protocol(r.raw("protocol"), source);

    if (r.has("seeds")) {
        const json& s = r.raw("seeds");
        if (s.is_number_unsigned()) {
            grid.seeds.clear();
            for (std::uint64_t i = 0; i < s.get<std::uint64_t>(); ++i) grid.seeds.push_back(i);
        } else if (s.is_array() && std::all_of(s.begin(), s.end(), [](const json& x) { return x.is_number_unsigned(); })) {
            grid.seeds = s.get<std::vector<std::uint64_t>>();
        } else {
            r.fail("seeds must be a count or a list of non-negative integers");
        }
    }

    const json& problems = r.raw("problems");
    if (!problems.is_array() || problems.empty()) r.fail("problems must be a non-empty list");
    for (std::size_t i = 0; i < problems.size(); ++i) {
        ProblemColumn col;
        col.spec = parse_problem(problems[i], "problems[" + std::to_string(i) + "]", source,
                                 base_dir, col.label);
        grid.columns.push_back(std::move(col));
    }

    const auto mus = r.get<std::vector<double>>("mus", kDefaultMus);
    const json& optimizers = r.has("optimizers") ? r.raw("optimizers") : json("default");
    if (optimizers.is_string()) {
        if (optimizers.get<std::string>() != "default") r.fail("optimizers must be \"default\" or a list");
        grid.rows = default_rows(mus);
    } else if (optimizers.is_array() && !optimizers.empty()) {
        if (r.has("mus")) r.fail("mus only applies to the default optimizer grid");
        for (std::size_t i = 0; i < optimizers.size(); ++i) {
            OptimizerRow row;
            row.config = parse_optimizer(optimizers[i], "optimizers[" + std::to_string(i) + "]",
                                         source, row.label);
            grid.rows.push_back(std::move(row));
        }
    } else {
        r.fail("optimizers must be \"default\" or a non-empty list");
    }
    r.finish();

    try {
        grid.validate();
    } catch (const Error& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return grid;
}

GridSpec load_grid_config(const std::filesystem::path& path) {
    return parse_grid_config(read_text_file(path), path.string(), path.parent_path());
}

std::string grid_config_to_json(const GridSpec& grid) {
    json rows = json::array(), cols = json::array();
    for (const auto& r : grid.rows) rows.push_back(optimizer_to_json(r));
    for (const auto& c : grid.columns) cols.push_back(problem_to_json(c));
    json j{{"version", kConfigVersion},
           {"name", grid.name},
           {"problems", cols},
           {"optimizers", rows},
           {"protocol", protocol_to_json(grid.protocol)},
           {"seeds", grid.seeds}};
    return j.dump(2) + "\n";
}

std::string results_to_json(const GridSpec& grid, const GridOutcome& outcome,
                            bool include_timing) {
    json runs = json::array();
    for (const auto& rec : outcome.runs) {
        const auto& res = rec.result;
        json trace_loss = json::array(), trace_metric = json::array();
        for (double x : res.train_loss) trace_loss.push_back(number_or_null(x));
        for (double x : res.eval_metric) trace_metric.push_back(number_or_null(x));
        runs.push_back({{"row", rec.row},
                        {"column", rec.column},
                        {"seed", res.seed},
                        {"final_metric", number_or_null(res.final_metric)},
                        {"divergent", res.divergent},
                        {"divergent_epoch", res.divergent_epoch ? json(*res.divergent_epoch) : json(nullptr)},
                        {"steps", res.steps},
                        {"train_loss", trace_loss},
                        {"eval_metric", trace_metric},
                        {"lr_scale", res.lr_scale},
                        {"elapsed_seconds", include_timing ? res.elapsed_seconds : 0.0}});
    }
    json rows = json::array(), cols = json::array();
    for (const auto& r : grid.rows) rows.push_back(r.label);
    for (const auto& c : grid.columns) cols.push_back(c.label);
    json j{{"format", "adafamily-results"},
           {"version", kResultsVersion},
           {"name", grid.name},
           {"metric", to_string(grid.protocol.metric)},
           {"rows", rows},
           {"columns", cols},
           {"config", json::parse(grid_config_to_json(grid))},
           {"runs", runs}};
    return j.dump(2) + "\n";
}

ResultsFile parse_results(std::string_view text, const std::string& source) {
    const json root = parse_json(text, source);
    ObjectReader r(root, "results", source);
    if (r.require<std::string>("format") != "adafamily-results") r.fail("not an adafamily results file");
    check_version(r, "version", kResultsVersion);

    ResultsFile out;
    out.name = r.get<std::string>("name", "");
    try {
        out.metric = parse_metric(r.require<std::string>("metric"));
    } catch (const ConfigError& e) {
        r.fail(e.what());
    }
    out.rows = r.require<std::vector<std::string>>("rows");
    out.columns = r.require<std::vector<std::string>>("columns");
    r.raw("config");

    const json& runs = r.raw("runs");
    if (!runs.is_array()) r.fail("runs must be a list");
    for (std::size_t i = 0; i < runs.size(); ++i) {
        ObjectReader rr(runs[i], "runs[" + std::to_string(i) + "]", source);
        RunRecord rec;
        rec.row = rr.require<std::string>("row");
        rec.column = rr.require<std::string>("column");
        auto& res = rec.result;
        res.seed = rr.require<std::uint64_t>("seed");
        try {
            res.final_metric = number_from(rr.raw("final_metric"));
            res.divergent = rr.require<bool>("divergent");
            const json& de = rr.has("divergent_epoch") ? rr.raw("divergent_epoch") : json(nullptr);
            if (!de.is_null()) res.divergent_epoch = de.get<std::uint64_t>();
            res.steps = rr.get<std::uint64_t>("steps", 0);
            if (rr.has("train_loss")) {
                for (const auto& x : rr.raw("train_loss")) res.train_loss.push_back(number_from(x));
            }
            if (rr.has("eval_metric")) {
                for (const auto& x : rr.raw("eval_metric")) res.eval_metric.push_back(number_from(x));
            }
            res.lr_scale = rr.get<std::vector<double>>("lr_scale", {});
            res.elapsed_seconds = rr.get<double>("elapsed_seconds", 0.0);
        } catch (const json::exception& e) {
            rr.fail(e.what());
        }
        rr.finish();
        if (!res.divergent && !std::isfinite(res.final_metric)) {
            rr.fail("non-divergent run without a finite final_metric");
        }
        out.runs.push_back(std::move(rec));
    }
    r.finish();
    return out;
}

ResultsFile load_results(const std::filesystem::path& path) {
    return parse_results(read_text_file(path), path.string());
}

ResultTable merge_results(const std::vector<ResultsFile>& files) {
    if (files.empty()) throw ConfigError("no results files given");
    std::vector<std::string> rows, cols;
    std::vector<RunRecord> runs;
    auto add_unique = [](std::vector<std::string>& into, const std::vector<std::string>& from) {
        for (const auto& s : from) {
            if (std::find(into.begin(), into.end(), s) == into.end()) into.push_back(s);
        }
    };
    for (const auto& f : files) {
        if (f.metric != files.front().metric) throw ConfigError("results files use different metrics");
        add_unique(rows, f.rows);
        add_unique(cols, f.columns);
        runs.insert(runs.end(), f.runs.begin(), f.runs.end());
    }
    return aggregate(rows, cols, runs, files.front().metric);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string(), 0, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("failed writing " + path.string());
}

} // namespace adafam
