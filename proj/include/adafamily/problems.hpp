#pragma once

#include "adafamily/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace adafam {

// f(theta) = 1/2 theta^T A theta - b^T theta with A symmetric positive definite.
struct Quadratic {
    Matrix a;
    std::vector<double> b;
    std::vector<double> minimizer;  // A^-1 b
    double minimum = 0.0;           // f(minimizer) = -1/2 b^T A^-1 b
};

// (1 - x)^2 + 100 (y - x^2)^2
struct Rosenbrock2D {};

// Multinomial logistic regression. Layout: W (classes x features, row-major), then bias (classes).
struct LogisticRegression {
    std::size_t num_features = 0;
    int num_classes = 0;
};

// One tanh hidden layer, softmax cross-entropy output. Layout:
//   W1 (hidden x features, row-major) | b1 (hidden) | W2 (classes x hidden, row-major) | b2 (classes)
struct Mlp1 {
    std::size_t num_features = 0;
    std::size_t hidden = 0;
    int num_classes = 0;
};

enum class ProblemKind { Quadratic, Rosenbrock2D, LogisticRegression, Mlp1 };

std::string_view to_string(ProblemKind kind);

class Problem {
public:
    using Spec = std::variant<Quadratic, Rosenbrock2D, LogisticRegression, Mlp1>;

    // Throws ShapeError / DomainError if the spec is inconsistent, including
    // a quadratic whose matrix is not symmetric positive definite.
    static Problem quadratic(Matrix a, std::vector<double> b);
    static Problem rosenbrock();
    static Problem logistic_regression(std::size_t num_features, int num_classes);
    static Problem mlp1(std::size_t num_features, std::size_t hidden, int num_classes);

    std::size_t dim() const noexcept { return dim_; }
    ProblemKind kind() const noexcept { return static_cast<ProblemKind>(spec_.index()); }
    bool needs_batch() const noexcept;
    const Spec& spec() const noexcept { return spec_; }

    // Loss at the minimizer for analytic kinds; 0 for Rosenbrock.
    double analytic_minimum() const;

private:
    Problem(Spec spec, std::size_t dim) : spec_(std::move(spec)), dim_(dim) {}

    Spec spec_;
    std::size_t dim_;
};

// Random SPD quadratic: eigenvalues log-spaced in [1, condition], a seeded
// orthogonal basis (Gram-Schmidt on Gaussian columns), b = A x* with x*
// uniform in [-1, 1]^dim.
Problem make_random_quadratic(std::size_t dim, double condition, std::uint64_t seed);

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

// Exact loss and gradient. Data-driven kinds average over the batch,
// accumulating examples left to right. `batch` must be null for analytic
// kinds and non-null, non-empty and shape-compatible for data-driven ones.
LossGrad eval_loss_grad(const Problem& problem, std::span<const double> params,
                        const Batch* batch = nullptr);
double eval_loss(const Problem& problem, std::span<const double> params,
                 const Batch* batch = nullptr);

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
std::vector<double> finite_diff_grad(const Problem& problem, std::span<const double> params,
                                     const Batch* batch = nullptr, double h = 1e-6);

// Starting point. Quadratic: all ones. Rosenbrock: (-1.2, 1.0). Learned
// models: every weight and bias uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]
// drawn from the seed's init stream in layout order.
std::vector<double> init_params(const Problem& problem, std::uint64_t seed);

// Argmax predictions for classifiers; ties resolve to the lowest class id.
std::vector<int> predict(const Problem& problem, std::span<const double> params,
                         const Matrix& features);

// Fraction of rows whose predicted class matches the label, in [0, 1].
double accuracy(const Problem& problem, std::span<const double> params, const Batch& batch);

} // namespace adafam
