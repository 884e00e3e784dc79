#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace adafam {

// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    bool operator==(const Matrix&) const = default;
};

// A mini-batch: n feature rows and their class ids.
struct Batch {
    Matrix features;
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
    bool operator==(const Batch&) const = default;
};

struct Dataset {
    std::string name;
    Matrix features;
    std::vector<int> labels;
    int num_classes = 0;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t num_features() const noexcept { return features.cols; }

    // Whole dataset as a single batch, in stored order.
    Batch as_batch() const { return Batch{features, labels}; }

    // Checks finiteness, label range, n >= num_classes >= 2 and that every
    // class occurs. Split outputs may legitimately fail the last two.
    void validate() const;

    bool operator==(const Dataset&) const = default;
};

struct BatchPlan {
    std::size_t batch_size = 32;
    std::uint64_t shuffle_seed = 0;
    bool drop_last = false;
};

// Isotropic Gaussian classes. Class k has mean e_(k mod dim) * (1 + k / dim),
// i.e. the vertices of the unit simplex when dim >= num_classes, stacked
// outward along the axes otherwise. Each coordinate gets N(0, spread^2) noise.
// Rows are emitted class by class.
Dataset gen_gaussian_blobs(std::uint64_t seed, std::size_t n_per_class, std::size_t dim,
                           int num_classes, double spread);

struct CsvOptions {
    bool has_header = false;
    // Divide every feature by the largest absolute feature value in the file.
    bool scale_to_unit = false;
};

// Rows are `label,x1,...,xp`. Errors carry the 1-based line number.
Dataset load_csv_dataset(const std::filesystem::path& path, int num_classes,
                         const CsvOptions& options = {});

// Stratified split: within each class, round(test_fraction * count) examples
// chosen by a seeded shuffle go to the test side. Both halves keep the
// original row order.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double test_fraction,
                                  std::uint64_t seed);

// Epoch permutation drawn from stream (shuffle_seed, epoch_index) only.
std::vector<std::size_t> epoch_permutation(std::size_t n, const BatchPlan& plan,
                                           std::uint64_t epoch_index);

// Consecutive slices of the epoch permutation. The trailing short batch is
// kept unless plan.drop_last.
std::vector<Batch> batches(const Dataset& dataset, const BatchPlan& plan,
                           std::uint64_t epoch_index);

Dataset subset(const Dataset& dataset, std::span<const std::size_t> rows);

} // namespace adafam
