#include "adafamily/problems.hpp"

#include "adafamily/error.hpp"
#include "adafamily/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace adafam {

std::string_view to_string(ProblemKind kind) {
    switch (kind) {
    case ProblemKind::Quadratic: return "quadratic";
    case ProblemKind::Rosenbrock2D: return "rosenbrock";
    case ProblemKind::LogisticRegression: return "logreg";
    case ProblemKind::Mlp1: return "mlp";
    }
    return "?";
}

namespace {

// Lower Cholesky factor of an SPD matrix; throws DomainError otherwise.
Matrix cholesky(const Matrix& a) {
    const std::size_t n = a.rows;
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0)) throw DomainError("quadratic matrix is not positive definite");
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

std::vector<double> cholesky_solve(const Matrix& l, std::span<const double> b) {
    const std::size_t n = l.rows;
    std::vector<double> y(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = y[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
        x[i] = s / l(i, i);
    }
    return x;
}

void require_classes(int num_classes) {
    if (num_classes < 2) throw DomainError("classifier needs at least 2 classes");
}

// Softmax cross-entropy for one example. Overwrites `logits` with
// d loss / d logits and returns the loss.
double softmax_xent(std::span<double> logits, int label) {
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - zmax);
    const double log_norm = zmax + std::log(sum);
    const double loss = log_norm - logits[label];
    for (std::size_t k = 0; k < logits.size(); ++k) logits[k] = std::exp(logits[k] - log_norm);
    logits[label] -= 1.0;
    return loss;
}

void check_batch(const Batch& batch, std::size_t features, int classes) {
    if (batch.size() == 0) throw DomainError("empty batch");
    if (batch.features.rows != batch.labels.size()) {
        throw ShapeError("batch feature rows and labels differ in count");
    }
    if (batch.features.cols != features) {
        throw ShapeError("batch has " + std::to_string(batch.features.cols) +
                         " features, model expects " + std::to_string(features));
    }
    for (int y : batch.labels) {
        if (y < 0 || y >= classes) throw DomainError("batch label out of range");
    }
}

LossGrad eval_quadratic(const Quadratic& q, std::span<const double> x) {
    const std::size_t n = q.b.size();
    LossGrad out{0.0, std::vector<double>(n)};
    double quad = 0.0, lin = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double ax = 0.0;
        for (std::size_t j = 0; j < n; ++j) ax += q.a(i, j) * x[j];
        out.grad[i] = ax - q.b[i];
        quad += x[i] * ax;
        lin += q.b[i] * x[i];
    }
    out.loss = 0.5 * quad - lin;
    return out;
}

LossGrad eval_rosenbrock(std::span<const double> p) {
    const double x = p[0], y = p[1];
    const double r = y - x * x;
    return {(1.0 - x) * (1.0 - x) + 100.0 * r * r,
            {-2.0 * (1.0 - x) - 400.0 * x * r, 200.0 * r}};
}

LossGrad eval_logreg(const LogisticRegression& lr, std::span<const double> w, const Batch& batch) {
    const std::size_t p = lr.num_features;
    const auto k_count = static_cast<std::size_t>(lr.num_classes);
    const std::size_t bias = k_count * p;
    LossGrad out{0.0, std::vector<double>(w.size(), 0.0)};
    std::vector<double> z(k_count);
    for (std::size_t n = 0; n < batch.size(); ++n) {
        const auto x = batch.features.row(n);
        for (std::size_t k = 0; k < k_count; ++k) {
            double s = w[bias + k];
            for (std::size_t j = 0; j < p; ++j) s += w[k * p + j] * x[j];
            z[k] = s;
        }
        out.loss += softmax_xent(z, batch.labels[n]);
        for (std::size_t k = 0; k < k_count; ++k) {
            for (std::size_t j = 0; j < p; ++j) out.grad[k * p + j] += z[k] * x[j];
            out.grad[bias + k] += z[k];
        }
    }
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv_n;
    for (double& g : out.grad) g *= inv_n;
    return out;
}

LossGrad eval_mlp(const Mlp1& net, std::span<const double> w, const Batch& batch) {
    const std::size_t p = net.num_features;
    const std::size_t h = net.hidden;
    const auto k_count = static_cast<std::size_t>(net.num_classes);
    const std::size_t off_b1 = h * p;
    const std::size_t off_w2 = off_b1 + h;
    const std::size_t off_b2 = off_w2 + k_count * h;

    LossGrad out{0.0, std::vector<double>(w.size(), 0.0)};
    std::vector<double> act(h), z(k_count), dact(h);
    for (std::size_t n = 0; n < batch.size(); ++n) {
        const auto x = batch.features.row(n);
        for (std::size_t u = 0; u < h; ++u) {
            double s = w[off_b1 + u];
            for (std::size_t j = 0; j < p; ++j) s += w[u * p + j] * x[j];
            act[u] = std::tanh(s);
        }
        for (std::size_t k = 0; k < k_count; ++k) {
            double s = w[off_b2 + k];
            for (std::size_t u = 0; u < h; ++u) s += w[off_w2 + k * h + u] * act[u];
            z[k] = s;
        }
        out.loss += softmax_xent(z, batch.labels[n]);

        std::fill(dact.begin(), dact.end(), 0.0);
        for (std::size_t k = 0; k < k_count; ++k) {
            for (std::size_t u = 0; u < h; ++u) {
                out.grad[off_w2 + k * h + u] += z[k] * act[u];
                dact[u] += w[off_w2 + k * h + u] * z[k];
            }
            out.grad[off_b2 + k] += z[k];
        }
        for (std::size_t u = 0; u < h; ++u) {
            const double da = dact[u] * (1.0 - act[u] * act[u]);
            for (std::size_t j = 0; j < p; ++j) out.grad[u * p + j] += da * x[j];
            out.grad[off_b1 + u] += da;
        }
    }
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv_n;
    for (double& g : out.grad) g *= inv_n;
    return out;
}

template <class... Fs>
struct Overloaded : Fs... {
    using Fs::operator()...;
};

} // namespace

Problem Problem::quadratic(Matrix a, std::vector<double> b) {
    const std::size_t n = b.size();
    if (n == 0) throw ShapeError("quadratic needs dimension >= 1");
    if (a.rows != n || a.cols != n) throw ShapeError("quadratic matrix must be square and match b");
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const double scale = std::max({1.0, std::abs(a(i, j)), std::abs(a(j, i))});
            if (std::abs(a(i, j) - a(j, i)) > 1e-12 * scale) {
                throw DomainError("quadratic matrix is not symmetric");
            }
        }
    }
    const Matrix l = cholesky(a);
    Quadratic q{std::move(a), std::move(b), {}, 0.0};
    q.minimizer = cholesky_solve(l, q.b);
    double bx = 0.0;
    for (std::size_t i = 0; i < n; ++i) bx += q.b[i] * q.minimizer[i];
    q.minimum = -0.5 * bx;
    return Problem(std::move(q), n);
}

Problem Problem::rosenbrock() { return Problem(Rosenbrock2D{}, 2); }

Problem Problem::logistic_regression(std::size_t num_features, int num_classes) {
    require_classes(num_classes);
    if (num_features < 1) throw DomainError("logistic regression needs >= 1 feature");
    const auto k = static_cast<std::size_t>(num_classes);
    return Problem(LogisticRegression{num_features, num_classes}, k * num_features + k);
}

Problem Problem::mlp1(std::size_t num_features, std::size_t hidden, int num_classes) {
    require_classes(num_classes);
    if (num_features < 1 || hidden < 1) throw DomainError("mlp needs >= 1 feature and hidden unit");
    const auto k = static_cast<std::size_t>(num_classes);
    return Problem(Mlp1{num_features, hidden, num_classes},
                   hidden * num_features + hidden + k * hidden + k);
}

bool Problem::needs_batch() const noexcept {
    return kind() == ProblemKind::LogisticRegression || kind() == ProblemKind::Mlp1;
}

double Problem::analytic_minimum() const {
    if (const auto* q = std::get_if<Quadratic>(&spec_)) return q->minimum;
    if (std::holds_alternative<Rosenbrock2D>(spec_)) return 0.0;
    throw DomainError("learned models have no closed-form minimum");
}

Problem make_random_quadratic(std::size_t dim, double condition, std::uint64_t seed) {
    if (dim < 1) throw DomainError("quadratic needs dimension >= 1");
    if (!(condition >= 1.0) || !std::isfinite(condition)) throw DomainError("condition must be >= 1");
    CounterRng rng(seed, streams::kProblemGeneration);

    // Columns of q, orthonormalized by modified Gram-Schmidt.
    Matrix q(dim, dim);
    for (double& x : q.data) x = rng.normal();
    for (std::size_t j = 0; j < dim; ++j) {
        for (std::size_t k = 0; k < j; ++k) {
            double dot = 0.0;
            for (std::size_t i = 0; i < dim; ++i) dot += q(i, j) * q(i, k);
            for (std::size_t i = 0; i < dim; ++i) q(i, j) -= dot * q(i, k);
        }
        double norm = 0.0;
        for (std::size_t i = 0; i < dim; ++i) norm += q(i, j) * q(i, j);
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < dim; ++i) q(i, j) /= norm;
    }

    std::vector<double> eig(dim, 1.0);
    for (std::size_t k = 0; k < dim && dim > 1; ++k) {
        eig[k] = std::pow(condition, static_cast<double>(k) / static_cast<double>(dim - 1));
    }

    Matrix a(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < dim; ++k) s += q(i, k) * eig[k] * q(j, k);
            a(i, j) = s;
            a(j, i) = s;
        }
    }

    std::vector<double> x_star(dim), b(dim, 0.0);
    for (double& x : x_star) x = rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) b[i] += a(i, j) * x_star[j];
    }
    return Problem::quadratic(std::move(a), std::move(b));
}

LossGrad eval_loss_grad(const Problem& problem, std::span<const double> params,
                        const Batch* batch) {
    if (params.size() != problem.dim()) {
        throw ShapeError("params have length " + std::to_string(params.size()) +
                         ", problem expects " + std::to_string(problem.dim()));
    }
    if (problem.needs_batch() && batch == nullptr) {
        throw DomainError(std::string(to_string(problem.kind())) + " requires a batch");
    }
    if (!problem.needs_batch() && batch != nullptr) {
        throw DomainError(std::string(to_string(problem.kind())) + " takes no batch");
    }
    return std::visit(
        Overloaded{
            [&](const Quadratic& q) { return eval_quadratic(q, params); },
            [&](const Rosenbrock2D&) { return eval_rosenbrock(params); },
            [&](const LogisticRegression& lr) {
                check_batch(*batch, lr.num_features, lr.num_classes);
                return eval_logreg(lr, params, *batch);
            },
            [&](const Mlp1& net) {
                check_batch(*batch, net.num_features, net.num_classes);
                return eval_mlp(net, params, *batch);
            },
        },
        problem.spec());
}

double eval_loss(const Problem& problem, std::span<const double> params, const Batch* batch) {
    return eval_loss_grad(problem, params, batch).loss;
}

std::vector<double> finite_diff_grad(const Problem& problem, std::span<const double> params,
                                     const Batch* batch, double h) {
    if (!(h > 0.0)) throw DomainError("finite difference step must be positive");
    std::vector<double> x(params.begin(), params.end());
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        x[i] = xi + h;
        const double up = eval_loss(problem, x, batch);
        x[i] = xi - h;
        const double down = eval_loss(problem, x, batch);
        x[i] = xi;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

std::vector<double> init_params(const Problem& problem, std::uint64_t seed) {
    CounterRng rng(seed, streams::kInit);
    auto fill = [&rng](std::vector<double>& out, std::size_t count, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < count; ++i) out.push_back(rng.uniform(-bound, bound));
    };
    std::vector<double> out;
    out.reserve(problem.dim());
    std::visit(Overloaded{
                   [&](const Quadratic& q) { out.assign(q.b.size(), 1.0); },
                   [&](const Rosenbrock2D&) { out = {-1.2, 1.0}; },
                   [&](const LogisticRegression& lr) {
                       const auto k = static_cast<std::size_t>(lr.num_classes);
                       fill(out, k * lr.num_features + k, lr.num_features);
                   },
                   [&](const Mlp1& net) {
                       const auto k = static_cast<std::size_t>(net.num_classes);
                       fill(out, net.hidden * net.num_features + net.hidden, net.num_features);
                       fill(out, k * net.hidden + k, net.hidden);
                   },
               },
               problem.spec());
    return out;
}

std::vector<int> predict(const Problem& problem, std::span<const double> params,
                         const Matrix& features) {
    if (!problem.needs_batch()) throw DomainError("predict requires a classifier");
    if (params.size() != problem.dim()) throw ShapeError("params do not match problem dimension");

    std::vector<int> out(features.rows);
    auto argmax = [](std::span<const double> z) {
        return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    };
    std::visit(
        Overloaded{
            [](const auto&) {},
            [&](const LogisticRegression& lr) {
                if (features.cols != lr.num_features) throw ShapeError("feature width mismatch");
                const std::size_t p = lr.num_features;
                const auto k_count = static_cast<std::size_t>(lr.num_classes);
                std::vector<double> z(k_count);
                for (std::size_t n = 0; n < features.rows; ++n) {
                    const auto x = features.row(n);
                    for (std::size_t k = 0; k < k_count; ++k) {
                        double s = params[k_count * p + k];
                        for (std::size_t j = 0; j < p; ++j) s += params[k * p + j] * x[j];
                        z[k] = s;
                    }
                    out[n] = argmax(z);
                }
            },
            [&](const Mlp1& net) {
                if (features.cols != net.num_features) throw ShapeError("feature width mismatch");
                const std::size_t p = net.num_features, h = net.hidden;
                const auto k_count = static_cast<std::size_t>(net.num_classes);
                const std::size_t off_w2 = h * p + h, off_b2 = off_w2 + k_count * h;
                std::vector<double> act(h), z(k_count);
                for (std::size_t n = 0; n < features.rows; ++n) {
                    const auto x = features.row(n);
                    for (std::size_t u = 0; u < h; ++u) {
                        double s = params[h * p + u];
                        for (std::size_t j = 0; j < p; ++j) s += params[u * p + j] * x[j];
                        act[u] = std::tanh(s);
                    }
                    for (std::size_t k = 0; k < k_count; ++k) {
                        double s = params[off_b2 + k];
                        for (std::size_t u = 0; u < h; ++u) s += params[off_w2 + k * h + u] * act[u];
                        z[k] = s;
                    }
                    out[n] = argmax(z);
                }
            },
        },
        problem.spec());
    return out;
}

double accuracy(const Problem& problem, std::span<const double> params, const Batch& batch) {
    if (batch.size() == 0) throw DomainError("empty batch");
    const auto pred = predict(problem, params, batch.features);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == batch.labels[i] ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(pred.size());
}

} // namespace adafam
