#include "qc/clustering.hpp"
#include "qc/error.hpp"
#include "qc/optimizer.hpp"
#include "test_util.hpp"

#include <Eigen/Dense>
#include <doctest.h>

#include <thread>

using namespace qc;
using qc::test::vec;

namespace {

double rosenbrock(const Vector& x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
}

Vector rosenbrock_grad(const Vector& x) {
    return vec({-400.0 * x[0] * (x[1] - x[0] * x[0]) - 2.0 * (1.0 - x[0]), 200.0 * (x[1] - x[0] * x[0])});
}

struct Quadratic {
    Eigen::MatrixXd a;
    Vector b;
    Vector minimizer;
};

// Random SPD matrix with eigenvalues log-uniform in [1, cond].
Quadratic random_quadratic(std::mt19937_64& rng, Eigen::Index d, double cond) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::MatrixXd g = Eigen::MatrixXd::NullaryExpr(d, d, [&] { return normal(rng); });
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    Vector ev(d);
    for (Eigen::Index i = 0; i < d; ++i) ev[i] = test::log_uniform(rng, 1.0, cond);
    Quadratic out;
    out.a = q * ev.asDiagonal() * q.transpose();
    out.b = Vector::NullaryExpr(d, [&] { return normal(rng); });
    out.minimizer = out.a.ldlt().solve(out.b);
    return out;
}

MinimizeOutcome minimize_quadratic(const Quadratic& q, const BfgsConfig& cfg, const IterationObserver& obs = {}) {
    return minimize([&](const Vector& x) { return 0.5 * x.dot(q.a * x) - q.b.dot(x); },
                    [&](const Vector& x) -> Vector { return q.a * x - q.b; },
                    Vector::Zero(q.b.size()), cfg, obs);
}

}  // namespace

TEST_CASE("one-dimensional quadratic") {
    const auto out = minimize([](const Vector& x) { return (x[0] - 3.0) * (x[0] - 3.0); },
                              [](const Vector& x) { return vec({2.0 * (x[0] - 3.0)}); }, vec({0.0}));
    CHECK(out.converged);
    CHECK(std::abs(out.x_star[0] - 3.0) <= 1e-8);
    CHECK(out.f_star == (out.x_star[0] - 3.0) * (out.x_star[0] - 3.0));
}

TEST_CASE("rosenbrock") {
    const auto out = minimize(rosenbrock, rosenbrock_grad, vec({-1.2, 1.0}));
    CHECK(out.converged);
    CHECK((out.x_star - vec({1.0, 1.0})).norm() <= 1e-5);
    CHECK(out.f_star == rosenbrock(out.x_star));
}

TEST_CASE("descent on a two-point potential lands in the grid-search basin minimum") {
    const PotentialField field(Dataset(test::to_matrix({{-1.0}, {1.0}})), KernelWidth(0.3));
    const auto out = descend_point(field, vec({-0.9}));
    CHECK(out.converged);
    const double grid_min = oracle::grid_argmin_1d(
        [&](double x) { return oracle::potential_loop({{-1.0}, {1.0}}, {x}, 0.3); }, -1.5, 0.0, 1500000);
    CHECK(std::abs(out.x_star[0] - grid_min) <= 1e-5);
    CHECK(std::abs(out.x_star[0] + 1.0) <= 1e-4);
}

TEST_CASE("descent from a global minimum or stationary point stays put") {
    const PotentialField single(Dataset(test::to_matrix({{0.4, -0.7}})), KernelWidth(1.0));
    const auto a = descend_point(single, vec({0.4, -0.7}));
    CHECK(a.converged);
    CHECK(a.f_star == 0.0);
    CHECK(a.x_star == vec({0.4, -0.7}));

    const PotentialField pair(Dataset(test::to_matrix({{-1.0, 0.0}, {1.0, 0.0}})), KernelWidth(0.5));
    const auto b = descend_point(pair, vec({0.0, 0.0}));
    CHECK(b.converged);
    CHECK(b.iterations == 0);
    CHECK(b.x_star == vec({0.0, 0.0}));
}

TEST_CASE("blob descents share one basin located by grid search") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> normal(0.0, 1.0);
    oracle::Points pts(50);
    for (auto& p : pts) p = {normal(rng), normal(rng)};
    const Dataset data(test::to_matrix(pts));
    const double sigma = estimate_sigma(data).sigma.value();
    const PotentialField field(data, KernelWidth(sigma));

    double lo_x = 1e9, hi_x = -1e9, lo_y = 1e9, hi_y = -1e9;
    for (const auto& p : pts) {
        lo_x = std::min(lo_x, p[0]);
        hi_x = std::max(hi_x, p[0]);
        lo_y = std::min(lo_y, p[1]);
        hi_y = std::max(hi_y, p[1]);
    }
    oracle::Point best{0.0, 0.0};
    double best_v = std::numeric_limits<double>::infinity();
    const int steps = 300;
    for (int i = 0; i <= steps; ++i) {
        for (int j = 0; j <= steps; ++j) {
            const oracle::Point q{lo_x + (hi_x - lo_x) * i / steps, lo_y + (hi_y - lo_y) * j / steps};
            const double v = oracle::potential_loop(pts, q, sigma);
            if (v < best_v) {
                best_v = v;
                best = q;
            }
        }
    }
    const double radius = sigma / 4.0;
    std::size_t near = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto out = descend_point(field, data.point(i));
        if (out.converged && (out.x_star - test::to_vector(best)).norm() <= radius) ++near;
    }
    CHECK(static_cast<double>(near) >= 0.95 * static_cast<double>(data.size()));
}

TEST_CASE("every accepted step satisfies the Armijo condition") {
    const BfgsConfig cfg;
    std::vector<IterationRecord> recs;
    const IterationObserver obs = [&](const IterationRecord& r) { recs.push_back(r); };
    minimize(rosenbrock, rosenbrock_grad, vec({-1.2, 1.0}), cfg, obs);

    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 20; ++trial) {
        const auto pts = oracle::random_points(rng, 20, 2, -2.0, 2.0);
        const double sigma = test::log_uniform(rng, 0.2, 2.0);
        const PotentialField field(Dataset(test::to_matrix(pts)), KernelWidth(sigma));
        minimize([&](const Vector& x) { return field.potential(x); },
                 [&](const Vector& x) { return field.gradient(x); },
                 test::to_vector(oracle::random_points(rng, 1, 2, -2.0, 2.0).front()), cfg, obs);
    }
    REQUIRE(!recs.empty());
    for (const auto& r : recs) {
        CHECK(r.directional < 0.0);
        CHECK(r.f_after <= r.f_before + cfg.armijo_c * r.step_size * r.directional);
    }
}

TEST_CASE("convex quadratics converge to the analytic minimizer") {
    std::mt19937_64 rng(23);
    for (Eigen::Index d = 1; d <= 10; ++d) {
        for (int trial = 0; trial < 5; ++trial) {
            const Quadratic q = random_quadratic(rng, d, 100.0);
            const auto out = minimize_quadratic(q, {});
            CHECK(out.converged);
            CHECK((out.x_star - q.minimizer).norm() <= 1e-8);
        }
    }
}

TEST_CASE("convex quadratics need at most d + 5 iterations after the last reset") {
    std::mt19937_64 rng(24);
    for (Eigen::Index d = 1; d <= 10; ++d) {
        for (int trial = 0; trial < 5; ++trial) {
            const Quadratic q = random_quadratic(rng, d, 10.0);
            std::size_t since_reset = 0;
            const auto out = minimize_quadratic(q, {}, [&](const IterationRecord& r) {
                since_reset = r.hessian_reset ? 0 : since_reset + 1;
            });
            CHECK(out.converged);
            CHECK(since_reset <= static_cast<std::size_t>(d) + 5);
        }
    }
}

TEST_CASE("steps never exceed max_step") {
    BfgsConfig cfg;
    cfg.max_step = 0.05;
    double longest = 0.0;
    const auto out = minimize(rosenbrock, rosenbrock_grad, vec({-1.2, 1.0}), cfg,
                              [&](const IterationRecord& r) { longest = std::max(longest, r.step_length); });
    CHECK(longest <= 0.05 * (1.0 + 1e-12));
    CHECK(out.converged);

    // descend_point caps steps at half a kernel width.
    const PotentialField field(Dataset(test::to_matrix({{0.0, 0.0}})), KernelWidth(0.2));
    const auto far = descend_point(field, vec({3.0, 0.0}));
    CHECK(far.iterations >= 30);
    CHECK(far.x_star.norm() <= 1e-6);
}

TEST_CASE("identical inputs give bitwise identical iterates") {
    auto run = [] {
        std::vector<double> trace;
        minimize(rosenbrock, rosenbrock_grad, vec({-1.2, 1.0}), {}, [&](const IterationRecord& r) {
            trace.push_back(r.f_after);
            trace.push_back(r.step_size);
        });
        return trace;
    };
    CHECK(run() == run());
}

TEST_CASE("iteration budget exhaustion is reported, not thrown") {
    BfgsConfig cfg;
    cfg.max_iters = 3;
    const auto out = minimize(rosenbrock, rosenbrock_grad, vec({-1.2, 1.0}), cfg);
    CHECK_FALSE(out.converged);
    CHECK(out.reason == StopReason::MaxIterations);
    CHECK(out.iterations == 3);
}

TEST_CASE("non-finite start aborts; non-finite trial points are rejected") {
    CHECK_THROWS_AS(minimize([](const Vector&) { return std::nan(""); }, [](const Vector& x) { return Vector(x); },
                             vec({1.0})),
                    NumericalError);
    CHECK_THROWS_AS(minimize([](const Vector& x) { return x.squaredNorm(); },
                             [](const Vector&) { return vec({INFINITY}); }, vec({1.0})),
                    NumericalError);

    // A wall of +inf past x = 1; the minimizer of the finite part lies beyond it.
    const Objective walled = [](const Vector& x) {
        return x[0] > 1.0 ? std::numeric_limits<double>::infinity() : (x[0] - 3.0) * (x[0] - 3.0);
    };
    const auto out = minimize(walled, [](const Vector& x) { return vec({2.0 * (x[0] - 3.0)}); }, vec({0.0}));
    CHECK(out.x_star[0] <= 1.0);
    CHECK(std::isfinite(out.f_star));
}

TEST_CASE("config validation") {
    const auto f = [](const Vector& x) { return x.squaredNorm(); };
    const auto g = [](const Vector& x) { return Vector(2.0 * x); };
    auto bad = [&](auto mutate) {
        BfgsConfig cfg;
        mutate(cfg);
        CHECK_THROWS_AS(minimize(f, g, vec({1.0}), cfg), InvalidArgument);
    };
    bad([](BfgsConfig& c) { c.grad_tol = 0.0; });
    bad([](BfgsConfig& c) { c.step_tol = -1.0; });
    bad([](BfgsConfig& c) { c.max_iters = 0; });
    bad([](BfgsConfig& c) { c.armijo_c = 1.0; });
    bad([](BfgsConfig& c) { c.backtrack_factor = 0.0; });
    bad([](BfgsConfig& c) { c.max_step = 0.0; });
}

TEST_CASE("concurrent descents on one field match sequential ones") {
    std::mt19937_64 rng(25);
    const auto pts = oracle::random_points(rng, 60, 2, -3.0, 3.0);
    const PotentialField field(Dataset(test::to_matrix(pts)), KernelWidth(0.6));
    std::vector<Vector> seq(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) seq[i] = descend_point(field, test::to_vector(pts[i])).x_star;
    std::vector<Vector> par(pts.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < 3; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < pts.size(); i += 3) par[i] = descend_point(field, test::to_vector(pts[i])).x_star;
        });
    for (auto& th : pool) th.join();
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(par[i] == seq[i]);
}
