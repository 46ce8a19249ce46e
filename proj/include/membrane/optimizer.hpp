#pragma once

// Bound-constrained limited-memory quasi-Newton minimizer with a projected
// backtracking line search, plus a finite-difference gradient checker.

#include "membrane/common.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>

namespace membrane {

struct SolverConfig {
    int max_iterations = 20000;
    /// Infinity-norm threshold on the projected gradient; <= 0 selects the
    /// problem-scaled default of the caller.
    double grad_tol = 0.0;
    int history_size = 10;
    double armijo = 1e-4;    // sufficient-decrease parameter
    double backtrack = 0.5;  // step shrink factor
    double step_init = 1.0;  // scale of the very first trial step
    int max_backtracks = 60;
};

inline void validate(const SolverConfig &c) {
    if (c.max_iterations < 0) throw InvalidArgument("solver.max_iterations must be >= 0");
    if (c.history_size < 1) throw InvalidArgument("solver.history_size must be >= 1");
    if (!(c.armijo > 0.0 && c.armijo < 1.0)) throw InvalidArgument("solver.armijo must lie in (0, 1)");
    if (!(c.backtrack > 0.0 && c.backtrack < 1.0))
        throw InvalidArgument("solver.backtrack must lie in (0, 1)");
    if (!(c.step_init > 0.0)) throw InvalidArgument("solver.step_init must be positive");
    if (c.max_backtracks < 1) throw InvalidArgument("solver.max_backtracks must be >= 1");
}

struct SolverReport {
    bool converged = false;
    int iterations = 0;
    double final_energy = 0.0;
    double grad_norm = 0.0;     // projected gradient, infinity norm
    double residual_norm = 0.0; // equilibrium residual, filled by callers that have one
    double grad_tol = 0.0;
    int line_search_failures = 0;
    bool monotone = true;       // every accepted iterate was <= its predecessor
    std::string message;
};

/// Objective signature: returns f(x) and writes the gradient into `grad`.
/// Throwing DegenerateElement marks x as outside the domain; the line search
/// backs off from such points.
using Objective = std::function<double(const Eigen::VectorXd &x, Eigen::VectorXd &grad)>;

struct BoxBounds {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

struct MinimizeResult {
    Eigen::VectorXd x;
    SolverReport report;
};

namespace detail {

inline void project(Eigen::VectorXd &x, const std::optional<BoxBounds> &b) {
    if (b) x = x.cwiseMax(b->lower).cwiseMin(b->upper);
}

/// Gradient with the components that push against an active bound removed.
inline Eigen::VectorXd projected_gradient(const Eigen::VectorXd &x, const Eigen::VectorXd &g,
                                          const std::optional<BoxBounds> &b) {
    Eigen::VectorXd pg = g;
    if (!b) return pg;
    for (Index i = 0; i < x.size(); ++i) {
        if (x[i] <= b->lower[i] && g[i] > 0.0) pg[i] = 0.0;
        if (x[i] >= b->upper[i] && g[i] < 0.0) pg[i] = 0.0;
    }
    return pg;
}

struct CurvaturePair {
    Eigen::VectorXd s, y;
    double rho;
};

/// Two-loop recursion: returns -H g for the stored curvature pairs.
inline Eigen::VectorXd lbfgs_direction(const Eigen::VectorXd &g,
                                       const std::deque<CurvaturePair> &mem) {
    Eigen::VectorXd q = g;
    std::vector<double> alpha(mem.size());
    for (std::size_t i = mem.size(); i-- > 0;) {
        alpha[i] = mem[i].rho * mem[i].s.dot(q);
        q -= alpha[i] * mem[i].y;
    }
    if (!mem.empty()) {
        const auto &last = mem.back();
        q *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t i = 0; i < mem.size(); ++i) {
        const double beta = mem[i].rho * mem[i].y.dot(q);
        q += (alpha[i] - beta) * mem[i].s;
    }
    return -q;
}

} // namespace detail

/// Minimizes `f` from `x0`. Accepted iterates never increase f. A trial step
/// is accepted on the Armijo condition, or, once f differences are at
/// round-off level, when f did not increase and the directional derivative
/// at the trial point shows the step neither stalled nor overshot.
inline MinimizeResult minimize_lbfgs(const Objective &f, Eigen::VectorXd x0,
                                     const std::optional<BoxBounds> &bounds,
                                     const SolverConfig &cfg, double grad_tol,
                                     std::ostream *log = nullptr) {
    validate(cfg);
    if (!(grad_tol > 0.0)) throw InvalidArgument("minimize_lbfgs: grad_tol must be positive");
    MinimizeResult out;
    auto &rep = out.report;
    rep.grad_tol = grad_tol;

    Eigen::VectorXd x = std::move(x0);
    detail::project(x, bounds);
    Eigen::VectorXd g(x.size());
    double fx = f(x, g); // a degenerate starting point propagates to the caller
    Eigen::VectorXd pg = detail::projected_gradient(x, g, bounds);
    rep.grad_norm = inf_norm(pg);

    if (log) *log << "iteration,energy,grad_norm\n" << 0 << ',' << fx << ',' << rep.grad_norm << '\n';

    std::deque<detail::CurvaturePair> mem;
    Eigen::VectorXd xn(x.size()), gn(x.size());
    const double eps = std::numeric_limits<double>::epsilon();

    int it = 0;
    for (; it < cfg.max_iterations; ++it) {
        if (rep.grad_norm <= grad_tol) break;

        Eigen::VectorXd d = detail::lbfgs_direction(pg, mem);
        for (Index i = 0; i < x.size(); ++i)
            if (pg[i] == 0.0 && g[i] != 0.0) d[i] = 0.0;
        double slope = d.dot(pg);
        if (!(slope < 0.0)) {
            mem.clear();
            d = -pg;
            slope = d.dot(pg);
        }

        double step = 1.0;
        if (mem.empty()) step = cfg.step_init / std::max(1.0, inf_norm(d));

        bool accepted = false;
        double fn = fx;
        for (int bt = 0; bt < cfg.max_backtracks && !accepted; ++bt, step *= cfg.backtrack) {
            xn = x + step * d;
            detail::project(xn, bounds);
            try {
                fn = f(xn, gn);
            } catch (const DegenerateElement &) {
                continue;
            }
            if (!std::isfinite(fn)) continue;
            const Eigen::VectorXd dx = xn - x;
            const double pred = g.dot(dx);
            const double threshold = fx + cfg.armijo * pred;
            if (threshold < fx && fn <= threshold) {
                accepted = true;
            } else if (pred < 0.0 && fn <= fx && std::abs(fn - fx) <= 64.0 * eps * std::abs(fx) &&
                       gn.dot(dx) <= -0.8 * pred) {
                accepted = true;
            }
        }

        if (!accepted) {
            ++rep.line_search_failures;
            if (!mem.empty()) {
                mem.clear();
                continue;
            }
            rep.message = "line search failed after " + std::to_string(cfg.max_backtracks) +
                          " backtracks";
            break;
        }

        if (fn > fx) rep.monotone = false;
        detail::CurvaturePair pair{xn - x, gn - g, 0.0};
        const double sy = pair.s.dot(pair.y);
        if (sy > eps * pair.y.squaredNorm()) {
            pair.rho = 1.0 / sy;
            mem.push_back(std::move(pair));
            if (static_cast<int>(mem.size()) > cfg.history_size) mem.pop_front();
        }
        x.swap(xn);
        g.swap(gn);
        fx = fn;
        pg = detail::projected_gradient(x, g, bounds);
        rep.grad_norm = inf_norm(pg);
        if (log) *log << it + 1 << ',' << fx << ',' << rep.grad_norm << '\n';
    }

    rep.iterations = it;
    rep.final_energy = fx;
    rep.converged = rep.grad_norm <= grad_tol;
    if (rep.converged)
        rep.message = "converged";
    else if (rep.message.empty())
        rep.message = "iteration limit reached";
    out.x = std::move(x);
    return out;
}

struct GradientCheck {
    double max_rel_error = 0.0;
    Index worst = -1;
    double analytic = 0.0;
    double numeric = 0.0;
};

/// Fourth-order central differences on every coordinate,
/// (-f(x+2h) + 8 f(x+h) - 8 f(x-h) + f(x-2h)) / 12h. The per-component error
/// is |analytic - numeric| / max(|analytic|, |numeric|, floor), where the
/// floor is 1e-3 of the largest analytic component so that near-zero
/// components are judged on the gradient's scale.
inline GradientCheck check_gradient(const Objective &f, const Eigen::VectorXd &x, double step) {
    if (!(step > 0.0)) throw InvalidArgument("check_gradient: step must be positive");
    Eigen::VectorXd g(x.size()), scratch(x.size());
    f(x, g);
    const double floor = std::max(1e-3 * inf_norm(g),
                                  std::numeric_limits<double>::min());
    GradientCheck out;
    Eigen::VectorXd xp = x;
    auto at = [&](Index i, double offset) {
        xp[i] = x[i] + offset;
        const double v = f(xp, scratch);
        xp[i] = x[i];
        return v;
    };
    for (Index i = 0; i < x.size(); ++i) {
        const double num = (8.0 * (at(i, step) - at(i, -step)) - (at(i, 2 * step) - at(i, -2 * step))) /
                           (12.0 * step);
        const double err =
            std::abs(g[i] - num) / std::max({std::abs(g[i]), std::abs(num), floor});
        if (err > out.max_rel_error || out.worst < 0) {
            out.max_rel_error = err;
            out.worst = i;
            out.analytic = g[i];
            out.numeric = num;
        }
    }
    return out;
}

} // namespace membrane
