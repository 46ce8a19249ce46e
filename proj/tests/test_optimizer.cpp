#include "membrane/optimizer.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace membrane;

namespace {

struct Quadratic {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;

    double operator()(const Eigen::VectorXd &x, Eigen::VectorXd &g) const {
        g = A * x - b;
        return 0.5 * x.dot(A * x) - b.dot(x);
    }
};

Quadratic random_quadratic(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = nd(rng);
    Quadratic q;
    q.A = M * M.transpose() + n * Eigen::MatrixXd::Identity(n, n);
    q.b = Eigen::VectorXd(n);
    for (int i = 0; i < n; ++i) q.b[i] = nd(rng);
    return q;
}

double rosenbrock(const Eigen::VectorXd &x, Eigen::VectorXd &g) {
    double f = 0.0;
    g.setZero(x.size());
    for (Index i = 0; i + 1 < x.size(); ++i) {
        const double a = x[i + 1] - x[i] * x[i], b = 1.0 - x[i];
        f += 100.0 * a * a + b * b;
        g[i] += -400.0 * a * x[i] - 2.0 * b;
        g[i + 1] += 200.0 * a;
    }
    return f;
}

} // namespace

TEST(Lbfgs, SolvesQuadratic) {
    const Quadratic q = random_quadratic(12, 1);
    const auto r = minimize_lbfgs(q, Eigen::VectorXd::Zero(12), std::nullopt, {}, 1e-12);
    EXPECT_TRUE(r.report.converged) << r.report.message;
    const Eigen::VectorXd exact = q.A.ldlt().solve(q.b);
    EXPECT_LT((r.x - exact).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Lbfgs, MonotoneOnRosenbrock) {
    std::ostringstream log;
    const auto r = minimize_lbfgs(rosenbrock, Eigen::VectorXd::Constant(6, -1.2), std::nullopt, {},
                                  1e-9, &log);
    EXPECT_TRUE(r.report.converged) << r.report.message;
    EXPECT_TRUE(r.report.monotone);
    EXPECT_LT((r.x - Eigen::VectorXd::Ones(6)).cwiseAbs().maxCoeff(), 1e-6);

    std::istringstream in(log.str());
    std::string line;
    std::getline(in, line); // header
    double prev = std::numeric_limits<double>::infinity();
    int rows = 0;
    while (std::getline(in, line)) {
        const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
        const double f = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        EXPECT_LE(f, prev);
        prev = f;
        ++rows;
    }
    EXPECT_GT(rows, 10);
}

TEST(Lbfgs, Deterministic) {
    const Eigen::VectorXd x0 = Eigen::VectorXd::LinSpaced(8, -2.0, 1.5);
    const auto a = minimize_lbfgs(rosenbrock, x0, std::nullopt, {}, 1e-9);
    const auto b = minimize_lbfgs(rosenbrock, x0, std::nullopt, {}, 1e-9);
    EXPECT_EQ(a.report.iterations, b.report.iterations);
    EXPECT_EQ(a.x, b.x);
}

TEST(Lbfgs, RespectsBounds) {
    // Separable quadratic: the bounded minimizer is the clamped unconstrained one.
    const int n = 6;
    Quadratic q;
    q.A = Eigen::VectorXd::LinSpaced(n, 1.0, 6.0).asDiagonal();
    q.b = Eigen::VectorXd::LinSpaced(n, -6.0, 6.0);
    BoxBounds box{Eigen::VectorXd::Constant(n, -0.5), Eigen::VectorXd::Constant(n, 0.5)};
    std::vector<Eigen::VectorXd> visited;
    Objective f = [&](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
        visited.push_back(x);
        return q(x, g);
    };
    const auto r = minimize_lbfgs(f, Eigen::VectorXd::Constant(n, 3.0), box, {}, 1e-12);
    EXPECT_TRUE(r.report.converged) << r.report.message;
    const Eigen::VectorXd unconstrained = q.b.cwiseQuotient(q.A.diagonal());
    const Eigen::VectorXd expected = unconstrained.cwiseMax(box.lower).cwiseMin(box.upper);
    EXPECT_LT((r.x - expected).cwiseAbs().maxCoeff(), 1e-10);
    for (const auto &x : visited) {
        EXPECT_TRUE((x.array() >= box.lower.array()).all());
        EXPECT_TRUE((x.array() <= box.upper.array()).all());
    }
}

TEST(Lbfgs, IterationLimitReportsNonConvergence) {
    SolverConfig cfg;
    cfg.max_iterations = 3;
    const auto r = minimize_lbfgs(rosenbrock, Eigen::VectorXd::Constant(6, -1.2), std::nullopt, cfg, 1e-9);
    EXPECT_FALSE(r.report.converged);
    EXPECT_EQ(r.report.iterations, 3);
    EXPECT_FALSE(r.report.message.empty());
}

TEST(Lbfgs, InvalidConfigurationRejected) {
    SolverConfig cfg;
    cfg.armijo = 1.5;
    EXPECT_THROW(minimize_lbfgs(rosenbrock, Eigen::VectorXd::Zero(2), std::nullopt, cfg, 1e-9),
                 InvalidArgument);
    EXPECT_THROW(minimize_lbfgs(rosenbrock, Eigen::VectorXd::Zero(2), std::nullopt, {}, 0.0),
                 InvalidArgument);
}

TEST(GradientCheck, QuadraticIsExact) {
    const Quadratic q = random_quadratic(10, 2);
    const auto c = check_gradient(q, Eigen::VectorXd::LinSpaced(10, -1.0, 1.0), 1e-3);
    EXPECT_LT(c.max_rel_error, 1e-10);
}

TEST(GradientCheck, FlagsWrongSign) {
    const Quadratic q = random_quadratic(5, 3);
    Objective bad = [&](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
        const double f = q(x, g);
        g[3] = -g[3];
        return f;
    };
    const auto c = check_gradient(bad, Eigen::VectorXd::Ones(5), 1e-4);
    EXPECT_EQ(c.worst, 3);
    EXPECT_GT(c.max_rel_error, 1.0);
}
