#include "adafamily/dataset.hpp"

#include "adafamily/error.hpp"
#include "adafamily/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string_view>

namespace adafam {

void Dataset::validate() const {
    if (features.rows != labels.size()) {
        throw ShapeError("dataset '" + name + "': feature rows and labels differ in count");
    }
    if (num_classes < 2) throw DomainError("dataset '" + name + "': need at least 2 classes");
    if (size() < static_cast<std::size_t>(num_classes)) {
        throw DomainError("dataset '" + name + "': fewer examples than classes");
    }
    for (std::size_t i = 0; i < features.data.size(); ++i) {
        if (!std::isfinite(features.data[i])) {
            throw NumericError("dataset '" + name + "': non-finite feature", i);
        }
    }
    std::vector<bool> seen(num_classes, false);
    for (int y : labels) {
        if (y < 0 || y >= num_classes) throw DomainError("dataset '" + name + "': label out of range");
        seen[y] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
        throw DomainError("dataset '" + name + "': some class has no examples");
    }
}

Dataset gen_gaussian_blobs(std::uint64_t seed, std::size_t n_per_class, std::size_t dim,
                           int num_classes, double spread) {
    if (n_per_class < 1 || dim < 1 || num_classes < 2) {
        throw DomainError("gaussian blobs need n_per_class >= 1, dim >= 1, num_classes >= 2");
    }
    if (!(spread > 0.0) || !std::isfinite(spread)) throw DomainError("spread must be positive");

    CounterRng rng(seed, streams::kDataGeneration);
    Dataset ds;
    ds.name = "blobs";
    ds.num_classes = num_classes;
    ds.features = Matrix(n_per_class * num_classes, dim);
    ds.labels.reserve(ds.features.rows);

    std::size_t r = 0;
    for (int k = 0; k < num_classes; ++k) {
        const std::size_t axis = static_cast<std::size_t>(k) % dim;
        const double radius = 1.0 + static_cast<double>(static_cast<std::size_t>(k) / dim);
        for (std::size_t i = 0; i < n_per_class; ++i, ++r) {
            auto row = ds.features.row(r);
            for (std::size_t j = 0; j < dim; ++j) {
                row[j] = (j == axis ? radius : 0.0) + spread * rng.normal();
            }
            ds.labels.push_back(k);
        }
    }
    return ds;
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <class T>
bool parse_number(std::string_view text, T& out) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end && !text.empty();
}

} // namespace

Dataset load_csv_dataset(const std::filesystem::path& path, int num_classes,
                         const CsvOptions& options) {
    const std::string source = path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(source, 0, "cannot open file");
    if (num_classes < 2) throw DomainError("num_classes must be at least 2");

    Dataset ds;
    ds.name = path.stem().string();
    ds.num_classes = num_classes;

    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    bool header_pending = options.has_header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
        if (trim(line).empty()) continue;
        if (header_pending) {
            header_pending = false;
            continue;
        }
        const auto fields = split_commas(line);
        if (fields.size() < 2) throw ParseError(source, line_no, "expected a label and at least one feature");
        if (width == 0) {
            width = fields.size() - 1;
        } else if (fields.size() - 1 != width) {
            throw ParseError(source, line_no, "ragged row: expected " + std::to_string(width) +
                                                  " features, found " +
                                                  std::to_string(fields.size() - 1));
        }
        int label = 0;
        if (!parse_number(fields[0], label)) {
            throw ParseError(source, line_no, "label '" + std::string(trim(fields[0])) + "' is not an integer");
        }
        if (label < 0 || label >= num_classes) {
            throw ParseError(source, line_no, "label " + std::to_string(label) +
                                                  " outside [0, " + std::to_string(num_classes) + ")");
        }
        ds.labels.push_back(label);
        for (std::size_t j = 1; j < fields.size(); ++j) {
            double x = 0.0;
            if (!parse_number(fields[j], x) || !std::isfinite(x)) {
                throw ParseError(source, line_no, "feature " + std::to_string(j) + " '" +
                                                      std::string(trim(fields[j])) +
                                                      "' is not a finite number");
            }
            ds.features.data.push_back(x);
        }
    }
    if (ds.labels.empty()) throw ParseError(source, 0, "no data rows");
    ds.features.rows = ds.labels.size();
    ds.features.cols = width;

    if (options.scale_to_unit) {
        double max_abs = 0.0;
        for (double x : ds.features.data) max_abs = std::max(max_abs, std::abs(x));
        if (max_abs > 0.0) {
            for (double& x : ds.features.data) x /= max_abs;
        }
    }
    ds.validate();
    return ds;
}

Dataset subset(const Dataset& dataset, std::span<const std::size_t> rows) {
    Dataset out;
    out.name = dataset.name;
    out.num_classes = dataset.num_classes;
    out.features = Matrix(rows.size(), dataset.num_features());
    out.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = dataset.features.row(rows[i]);
        std::copy(src.begin(), src.end(), out.features.row(i).begin());
        out.labels.push_back(dataset.labels[rows[i]]);
    }
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double test_fraction,
                                  std::uint64_t seed) {
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
        throw DomainError("test_fraction must lie in [0, 1]");
    }
    CounterRng rng(seed, streams::kSplit);
    std::vector<bool> to_test(dataset.size(), false);
    for (int k = 0; k < dataset.num_classes; ++k) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            if (dataset.labels[i] == k) members.push_back(i);
        }
        rng.shuffle(std::span(members));
        const auto n_test = static_cast<std::size_t>(
            std::llround(test_fraction * static_cast<double>(members.size())));
        for (std::size_t i = 0; i < n_test; ++i) to_test[members[i]] = true;
    }
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        (to_test[i] ? test_rows : train_rows).push_back(i);
    }
    auto train = subset(dataset, train_rows);
    auto test = subset(dataset, test_rows);
    train.name += "/train";
    test.name += "/test";
    return {std::move(train), std::move(test)};
}

std::vector<std::size_t> epoch_permutation(std::size_t n, const BatchPlan& plan,
                                           std::uint64_t epoch_index) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    CounterRng rng(plan.shuffle_seed, streams::kShuffleBase + epoch_index);
    rng.shuffle(std::span(order));
    return order;
}

std::vector<Batch> batches(const Dataset& dataset, const BatchPlan& plan,
                           std::uint64_t epoch_index) {
    const std::size_t n = dataset.size();
    if (plan.batch_size < 1) throw DomainError("batch_size must be at least 1");
    if (plan.batch_size > n) {
        throw DomainError("batch_size " + std::to_string(plan.batch_size) +
                          " exceeds dataset size " + std::to_string(n));
    }
    const auto order = epoch_permutation(n, plan, epoch_index);
    std::vector<Batch> out;
    for (std::size_t start = 0; start < n; start += plan.batch_size) {
        const std::size_t len = std::min(plan.batch_size, n - start);
        if (len < plan.batch_size && plan.drop_last) break;
        Batch b;
        b.features = Matrix(len, dataset.num_features());
        b.labels.reserve(len);
        for (std::size_t i = 0; i < len; ++i) {
            const auto src = dataset.features.row(order[start + i]);
            std::copy(src.begin(), src.end(), b.features.row(i).begin());
            b.labels.push_back(dataset.labels[order[start + i]]);
        }
        out.push_back(std::move(b));
    }
    return out;
}

} // namespace adafam
