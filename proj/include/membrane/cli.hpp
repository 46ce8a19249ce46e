#pragma once

// Command implementations behind tools/membrane_cli. Each command returns the
// process exit code: 0 success, 2 convergence warning or failed gradient
// check, 1 error (message on `err`).

#include "membrane/config.hpp"
#include "membrane/equilibrium.hpp"
#include "membrane/flattening.hpp"
#include "membrane/mesh_io.hpp"
#include "membrane/optimizer.hpp"
#include "membrane/pattern_loop.hpp"
#include "membrane/svg.hpp"

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace membrane {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitWarning = 2;

struct CliOptions {
    std::filesystem::path config;
    std::optional<std::filesystem::path> out; // overrides output.directory
    std::optional<std::filesystem::path> log;
    bool csv = false;
    bool inject_fault = false; // check-gradients only: flips the sign of grad S
};

// ---------------------------------------------------------------------------
// Helpers shared by the commands
// ---------------------------------------------------------------------------

/// Sphere through the nodes in the central quarter of the plan bounding box
/// (|x - x_mid| <= span_x / 4 and likewise for y).
inline Sphere central_sphere(const SurfaceMesh &mesh) {
    Vec3 lo = mesh.nodes.front(), hi = lo;
    for (const auto &p : mesh.nodes) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const Vec3 mid = 0.5 * (lo + hi), quarter = 0.25 * (hi - lo);
    std::vector<Vec3> pts;
    for (const auto &p : mesh.nodes)
        if (std::abs(p.x() - mid.x()) <= quarter.x() && std::abs(p.y() - mid.y()) <= quarter.y())
            pts.push_back(p);
    return fit_sphere(pts);
}

struct FlattenResult {
    std::vector<PatternSheet> initial;
    std::vector<PatternSheet> patterns;
    std::vector<FitResult> fits;
    SurfaceMesh surface; // material angles follow the fitted patterns
};

/// Projection plus one fit per sheet with a uniform reduction stress.
inline FlattenResult flatten_surface(const SurfaceMesh &mesh, const MaterialModel &mat,
                                     const TargetStress &sigma_hat, const ProjectionMode &mode,
                                     const FitConfig &fit) {
    FlattenResult r;
    r.surface = mesh;
    r.initial = project_all(mesh, mode);
    apply_material_angles(r.surface, r.initial);
    const ReductionStressField field(mesh.elements.size(),
                                     Eigen::Vector2d(sigma_hat.sigma1, sigma_hat.sigma2));
    const UnstressedLengths L0 = surface_unstressed_lengths(r.surface, mat, field);
    for (const auto &ps : r.initial) {
        r.fits.push_back(fit_pattern(ps, sheet_lengths(L0, ps), fit));
        r.patterns.push_back(r.fits.back().sheet);
    }
    apply_material_angles(r.surface, r.patterns);
    return r;
}

inline std::string history_csv(const std::vector<StepRecord> &history) {
    std::string out = "step,direction,avg,max,min,stddev\n";
    for (const auto &r : history)
        for (int d = 0; d < 2; ++d) {
            const DirectionStats &s = d == 0 ? r.stats.x : r.stats.y;
            out += std::to_string(r.step) + (d == 0 ? ",x," : ",y,") + format_double(s.average) +
                   ',' + format_double(s.max) + ',' + format_double(s.min) + ',' +
                   format_double(s.stddev) + '\n';
        }
    return out;
}

inline std::string fixed(double v, int digits = 4) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline std::string history_table(const std::vector<StepRecord> &history) {
    std::string out = "step dir      avg      max      min   stddev\n";
    for (const auto &r : history)
        for (int d = 0; d < 2; ++d) {
            const DirectionStats &s = d == 0 ? r.stats.x : r.stats.y;
            char buf[128];
            std::snprintf(buf, sizeof buf, "%4d %3s %8.4f %8.4f %8.4f %8.4f\n", r.step,
                          d == 0 ? "x" : "y", s.average, s.max, s.min, s.stddev);
            out += buf;
        }
    return out;
}

inline std::string solver_line(const char *what, const SolverReport &r) {
    return std::string(what) + ": " + r.message + ", iterations " + std::to_string(r.iterations) +
           ", |grad| " + format_double(r.grad_norm) + " (tol " + format_double(r.grad_tol) + ")";
}

inline void write_patterns(const std::filesystem::path &dir, const std::vector<PatternSheet> &initial,
                           const std::vector<PatternSheet> &patterns) {
    for (std::size_t s = 0; s < patterns.size(); ++s) {
        const std::string stem = "pattern_sheet" + std::to_string(patterns[s].sheet);
        save_pattern(patterns[s], dir / (stem + ".txt"));
        write_file_atomic(dir / (stem + ".svg"), pattern_overlay_svg(initial[s], patterns[s]));
    }
}

struct RunContext {
    RunConfig cfg;
    SurfaceMesh mesh;
    std::filesystem::path out;
};

inline RunContext prepare(const CliOptions &opt) {
    RunContext c{load_run_config(opt.config), {}, {}};
    c.mesh = build_model(c.cfg.model);
    c.out = opt.out ? *opt.out : c.cfg.output;
    std::filesystem::create_directories(c.out);
    return c;
}

template <class F>
int guarded(std::ostream &err, F &&f) {
    try {
        return f();
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// Full reduction-stress loop. Writes history.csv, equilibrium.txt, and per
/// sheet pattern_sheet<s>.txt / .svg.
inline int cmd_optimize(const CliOptions &opt, std::ostream &out, std::ostream &err) {
    return guarded(err, [&] {
        RunContext c = prepare(opt);
        const MaterialModel mat = make_material(c.cfg.material);
        std::string log;
        const LoopResult res = run_pattern_optimization(
            c.mesh, mat, c.cfg.target, c.cfg.pressure, c.cfg.projection, c.cfg.loop,
            [&](const StepRecord &r) {
                log += "step " + std::to_string(r.step) + '\n';
                for (std::size_t s = 0; s < r.fits.size(); ++s)
                    log += "  " + solver_line(("fit sheet " + std::to_string(s)).c_str(), r.fits[s]) + '\n';
                log += "  " + solver_line("equilibrium", r.equilibrium) + ", residual " +
                       format_double(r.equilibrium.residual_norm) + '\n';
            });

        write_file_atomic(c.out / "history.csv", history_csv(res.history));
        save_mesh(res.equilibrium, c.out / "equilibrium.txt");
        write_patterns(c.out, res.initial_patterns, res.patterns);
        if (opt.log) write_file_atomic(*opt.log, log);

        out << (opt.csv ? history_csv(res.history) : history_table(res.history));
        if (c.cfg.pressure && !opt.csv)
            out << "central sphere radius " << fixed(central_sphere(res.equilibrium).radius) << " m\n";
        if (res.any_warning()) {
            err << "warning: an inner solve did not converge (see --log)\n";
            return kExitWarning;
        }
        return kExitOk;
    });
}

/// One equilibrium solve for the pattern obtained by removing the target
/// stress from the configured surface.
inline int cmd_equilibrium(const CliOptions &opt, std::ostream &out, std::ostream &err) {
    return guarded(err, [&] {
        RunContext c = prepare(opt);
        const MaterialModel mat = make_material(c.cfg.material);
        const FlattenResult fl =
            flatten_surface(c.mesh, mat, c.cfg.target, c.cfg.projection, c.cfg.loop.fit);
        const auto refs = references_from_patterns(fl.surface, fl.patterns);
        std::ostringstream log;
        const EquilibriumResult eq =
            minimize_energy(fl.surface, refs, mat, c.cfg.pressure, c.cfg.loop.solver,
                            opt.log ? &log : nullptr);
        const auto stresses = recover_stresses(eq.surface, refs, mat);
        const StressStats st = stress_statistics(stresses);

        save_mesh(eq.surface, c.out / "equilibrium.txt");
        if (opt.log) write_file_atomic(*opt.log, log.str());

        if (opt.csv) {
            out << "quantity,value\n"
                << "iterations," << eq.report.iterations << '\n'
                << "residual," << format_double(eq.report.residual_norm) << '\n'
                << "grad_tol," << format_double(eq.report.grad_tol) << '\n'
                << "avg_x," << format_double(st.x.average) << '\n'
                << "avg_y," << format_double(st.y.average) << '\n';
            if (c.cfg.pressure)
                out << "sphere_radius," << format_double(central_sphere(eq.surface).radius) << '\n';
        } else {
            out << solver_line("equilibrium", eq.report) << '\n'
                << "residual (inf-norm) " << format_double(eq.report.residual_norm) << " kN\n"
                << "stress x avg " << fixed(st.x.average) << " sd " << fixed(st.x.stddev)
                << ", y avg " << fixed(st.y.average) << " sd " << fixed(st.y.stddev) << " kN/m\n";
            if (c.cfg.pressure)
                out << "central sphere radius " << fixed(central_sphere(eq.surface).radius) << " m\n";
        }
        return eq.report.converged ? kExitOk : kExitWarning;
    });
}

/// Projection and pattern fit with the target stress removed.
inline int cmd_flatten(const CliOptions &opt, std::ostream &out, std::ostream &err) {
    return guarded(err, [&] {
        RunContext c = prepare(opt);
        const MaterialModel mat = make_material(c.cfg.material);
        const FlattenResult fl =
            flatten_surface(c.mesh, mat, c.cfg.target, c.cfg.projection, c.cfg.loop.fit);
        write_patterns(c.out, fl.initial, fl.patterns);
        bool ok = true;
        if (opt.csv) out << "sheet,F,iterations,converged\n";
        for (const auto &f : fl.fits) {
            ok &= f.report.converged;
            if (opt.csv)
                out << f.sheet.sheet << ',' << format_double(f.F) << ',' << f.report.iterations << ','
                    << (f.report.converged ? 1 : 0) << '\n';
            else
                out << "sheet " << f.sheet.sheet << ": F = " << format_double(f.F) << ", "
                    << solver_line("fit", f.report) << '\n';
        }
        return ok ? kExitOk : kExitWarning;
    });
}

inline int cmd_cable_demo(const CliOptions &opt, std::ostream &out, std::ostream &err) {
    return guarded(err, [&] {
        const auto steps = cable_demo();
        if (opt.csv) {
            out << "step,reduction_stress,unstressed_length,stress\n";
            for (const auto &s : steps)
                out << s.step << ',' << format_double(s.reduction_stress) << ','
                    << format_double(s.unstressed_length) << ',' << format_double(s.stress) << '\n';
        } else {
            out << "step  sigma_hat     L0  sigma\n";
            for (const auto &s : steps) {
                char buf[96];
                std::snprintf(buf, sizeof buf, "%4d %10.4f %6.2f %6.2f\n", s.step, s.reduction_stress,
                              s.unstressed_length, s.stress);
                out << buf;
            }
        }
        return kExitOk;
    });
}

struct GradientReport {
    std::string name;
    GradientCheck check;
    Index coordinates = 0;
};

inline constexpr double kGradientTolerance = 1e-6;

/// Central-difference checks of grad S, grad Pi (with pressure) and grad F
/// at a seeded random perturbation of the configured model.
inline std::vector<GradientReport> gradient_reports(const RunConfig &cfg, const SurfaceMesh &mesh,
                                                    unsigned seed, bool inject_fault) {
    const MaterialModel mat = make_material(cfg.material);
    const FlattenResult fl = flatten_surface(mesh, mat, cfg.target, cfg.projection, cfg.loop.fit);
    const auto refs = references_from_patterns(fl.surface, fl.patterns);
    double h = 0.0;
    for (const auto &r : refs) h += std::sqrt(r.area());
    h /= double(refs.size());

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.05 * h, 0.05 * h);
    SurfaceMesh perturbed = fl.surface;
    for (Index i = 0; i < perturbed.node_count(); ++i)
        for (int j = 0; j < 3; ++j)
            if (!perturbed.fixed[i][j]) perturbed.nodes[i][j] += jitter(rng);

    const DofMap dofs = DofMap::from_mesh(perturbed);
    const Eigen::VectorXd x = dofs.gather(perturbed);
    const double step = 1e-4 * h;
    std::vector<GradientReport> out;

    Objective S = equilibrium_objective(perturbed, refs, mat, std::nullopt);
    if (inject_fault)
        S = [inner = S](const Eigen::VectorXd &v, Eigen::VectorXd &g) {
            const double f = inner(v, g);
            g = -g;
            return f;
        };
    out.push_back({"strain energy S", check_gradient(S, x, step), x.size()});
    if (cfg.pressure)
        out.push_back({"total potential Pi",
                       check_gradient(equilibrium_objective(perturbed, refs, mat, cfg.pressure), x, step),
                       x.size()});

    const ReductionStressField field(mesh.elements.size(),
                                     Eigen::Vector2d(cfg.target.sigma1, cfg.target.sigma2));
    const UnstressedLengths L0 = surface_unstressed_lengths(fl.surface, mat, field);
    for (const auto &ps : fl.patterns) {
        const UnstressedLengths l0 = sheet_lengths(L0, ps);
        Eigen::VectorXd p(2 * ps.node_count());
        for (Index i = 0; i < ps.node_count(); ++i)
            p.segment<2>(2 * i) = ps.nodes[i] + Vec2(jitter(rng), jitter(rng));
        Objective F = [&ps, l0](const Eigen::VectorXd &v, Eigen::VectorXd &g) {
            std::vector<Vec2> nodes(ps.node_count());
            for (Index i = 0; i < ps.node_count(); ++i) nodes[i] = v.segment<2>(2 * i);
            return pattern_objective(nodes, ps.elements, l0, &g);
        };
        out.push_back({"pattern objective F, sheet " + std::to_string(ps.sheet),
                       check_gradient(F, p, step), p.size()});
    }
    return out;
}

inline int cmd_check_gradients(const CliOptions &opt, std::ostream &out, std::ostream &err) {
    return guarded(err, [&] {
        const RunConfig cfg = load_run_config(opt.config);
        const SurfaceMesh mesh = build_model(cfg.model);
        const auto reports = gradient_reports(cfg, mesh, 1, opt.inject_fault);
        bool ok = true;
        if (opt.csv) out << "objective,coordinates,max_rel_error,worst,analytic,numeric,pass\n";
        for (const auto &r : reports) {
            const bool pass = r.check.max_rel_error < kGradientTolerance;
            ok &= pass;
            if (opt.csv) {
                out << r.name << ',' << r.coordinates << ',' << format_double(r.check.max_rel_error)
                    << ',' << r.check.worst << ',' << format_double(r.check.analytic) << ','
                    << format_double(r.check.numeric) << ',' << (pass ? 1 : 0) << '\n';
            } else {
                out << (pass ? "PASS " : "FAIL ") << r.name << ": max rel error "
                    << format_double(r.check.max_rel_error) << " at coordinate " << r.check.worst
                    << " (analytic " << format_double(r.check.analytic) << ", numeric "
                    << format_double(r.check.numeric) << ")\n";
            }
        }
        return ok ? kExitOk : kExitWarning;
    });
}

} // namespace membrane
