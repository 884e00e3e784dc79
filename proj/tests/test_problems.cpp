#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "adafamily/dataset.hpp"
#include "adafamily/error.hpp"
#include "adafamily/problems.hpp"
#include "adafamily/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

using namespace adafam;

namespace {

Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double out = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) out = std::max(out, std::abs(a[i] - b[i]));
    return out;
}

Batch toy_batch() {
    Batch b{Matrix(4, 2), {0, 1, 0, 1}};
    b.features.data = {1.0, 0.0, 0.0, 1.0, -1.0, 0.5, 0.3, -2.0};
    return b;
}

} // namespace

TEST_CASE("quadratic with identity") {
    const auto p = Problem::quadratic(identity(2), {0.0, 0.0});
    const std::vector<double> x{3.0, 4.0};
    const auto lg = eval_loss_grad(p, x);
    CHECK(lg.loss == 12.5);
    CHECK(lg.grad == x);
    CHECK(p.analytic_minimum() == 0.0);
    CHECK(init_params(p, 0) == std::vector<double>{1.0, 1.0});
}

TEST_CASE("quadratic rejects bad matrices") {
    Matrix asym(2, 2);
    asym.data = {1.0, 0.5, 0.0, 1.0};
    CHECK_THROWS_AS(Problem::quadratic(asym, {0.0, 0.0}), DomainError);
    Matrix indef(2, 2);
    indef.data = {1.0, 0.0, 0.0, -1.0};
    CHECK_THROWS_AS(Problem::quadratic(indef, {0.0, 0.0}), DomainError);
    CHECK_THROWS_AS(Problem::quadratic(identity(2), {0.0}), ShapeError);
}

TEST_CASE("random quadratic minimizer") {
    const auto p = make_random_quadratic(10, 100.0, 0);
    const auto& q = std::get<Quadratic>(p.spec());
    const auto lg = eval_loss_grad(p, q.minimizer);
    for (double g : lg.grad) CHECK(std::abs(g) < 1e-10);
    CHECK(lg.loss == doctest::Approx(q.minimum).epsilon(1e-12));
    const auto again = make_random_quadratic(10, 100.0, 0);
    CHECK(std::get<Quadratic>(again.spec()).a == q.a);
}

TEST_CASE("rosenbrock") {
    const auto p = Problem::rosenbrock();
    CHECK(init_params(p, 3) == std::vector<double>{-1.2, 1.0});
    const auto at_min = eval_loss_grad(p, std::vector<double>{1.0, 1.0});
    CHECK(at_min.loss == 0.0);
    CHECK(at_min.grad == std::vector<double>{0.0, 0.0});
    const auto at_origin = eval_loss_grad(p, std::vector<double>{0.0, 0.0});
    CHECK(at_origin.loss == 1.0);
    CHECK(at_origin.grad == std::vector<double>{-2.0, 0.0});
}

TEST_CASE("logistic regression at zero") {
    const auto p = Problem::logistic_regression(2, 2);
    const auto batch = toy_batch();
    const std::vector<double> zero(p.dim(), 0.0);
    const auto lg = eval_loss_grad(p, zero, &batch);
    CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(max_abs_diff(lg.grad, finite_diff_grad(p, zero, &batch)) < 1e-8);
}

TEST_CASE("gradients match finite differences at random points") {
    const auto data = gen_gaussian_blobs(0, 5, 3, 3, 0.5);
    const auto batch = data.as_batch();
    const auto logreg = Problem::logistic_regression(3, 3);
    const auto mlp = Problem::mlp1(3, 5, 3);
    CounterRng rng(99, 1);
    for (int draw = 0; draw < 20; ++draw) {
        for (const auto* p : {&logreg, &mlp}) {
            std::vector<double> x(p->dim());
            for (auto& v : x) v = rng.uniform(-1.0, 1.0);
            const auto exact = eval_loss_grad(*p, x, &batch);
            const auto fd = finite_diff_grad(*p, x, &batch);
            CHECK(max_abs_diff(exact.grad, fd) < 1e-7);
            CHECK(exact.loss >= 0.0);
        }
    }
}

TEST_CASE("batch loss is the mean of per-example losses") {
    const auto data = gen_gaussian_blobs(1, 4, 2, 2, 0.5);
    const auto p = Problem::mlp1(2, 4, 2);
    const auto x = init_params(p, 7);
    const auto full = data.as_batch();
    double sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::size_t row[] = {i};
        const auto one = subset(data, row).as_batch();
        sum += eval_loss(p, x, &one);
    }
    CHECK(eval_loss(p, x, &full) == doctest::Approx(sum / data.size()).epsilon(1e-14));
}

TEST_CASE("loss is invariant to batch order") {
    const auto data = gen_gaussian_blobs(2, 10, 3, 3, 0.5);
    const auto p = Problem::logistic_regression(3, 3);
    const auto x = init_params(p, 1);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::reverse(order.begin(), order.end());
    const auto a = data.as_batch();
    const auto b = subset(data, order).as_batch();
    const auto la = eval_loss_grad(p, x, &a);
    const auto lb = eval_loss_grad(p, x, &b);
    CHECK(std::abs(la.loss - lb.loss) < 1e-12);
    CHECK(max_abs_diff(la.grad, lb.grad) < 1e-12);
}

TEST_CASE("init is seeded and bounded by fan-in") {
    const auto p = Problem::mlp1(4, 9, 3);
    const auto a = init_params(p, 5);
    CHECK(a == init_params(p, 5));
    CHECK(a != init_params(p, 6));
    const double w1_bound = 1.0 / std::sqrt(4.0);
    const double w2_bound = 1.0 / std::sqrt(9.0);
    for (std::size_t i = 0; i < 9 * 4 + 9; ++i) CHECK(std::abs(a[i]) <= w1_bound);
    for (std::size_t i = 9 * 4 + 9; i < a.size(); ++i) CHECK(std::abs(a[i]) <= w2_bound);
}

TEST_CASE("shape and batch errors") {
    const auto logreg = Problem::logistic_regression(2, 2);
    const auto batch = toy_batch();
    const std::vector<double> short_params(logreg.dim() - 1, 0.0);
    const std::vector<double> params(logreg.dim(), 0.0);
    CHECK_THROWS_AS(eval_loss_grad(logreg, short_params, &batch), ShapeError);
    CHECK_THROWS_AS(eval_loss_grad(logreg, params), Error);
    const auto quad = Problem::quadratic(identity(2), {0.0, 0.0});
    CHECK_THROWS_AS(eval_loss_grad(quad, std::vector<double>{0.0, 0.0}, &batch), Error);
    CHECK_THROWS_AS(Problem::logistic_regression(2, 1), DomainError);
    const auto wide = Problem::logistic_regression(3, 2);
    CHECK_THROWS_AS(eval_loss_grad(wide, std::vector<double>(wide.dim(), 0.0), &batch), ShapeError);
}

TEST_CASE("predict and accuracy") {
    const auto p = Problem::logistic_regression(2, 2);
    const auto batch = toy_batch();
    // Scores: class 0 gets x0, class 1 gets x1.
    const std::vector<double> params{1.0, 0.0, 0.0, 1.0, 0.0, 0.0};
    CHECK(predict(p, params, batch.features) == std::vector<int>{0, 1, 1, 0});
    CHECK(accuracy(p, params, batch) == 0.5);
    const std::vector<double> zero(p.dim(), 0.0);
    CHECK(predict(p, zero, batch.features) == std::vector<int>{0, 0, 0, 0});
}
