#pragma once

// Outer cutting-pattern iteration: remove the reduction stress from the
// current surface, fit the planar sheets, find the equilibrium shape they
// produce, and correct the reduction stress by the remaining stress error.

#include "membrane/common.hpp"
#include "membrane/equilibrium.hpp"
#include "membrane/fem.hpp"
#include "membrane/flattening.hpp"
#include "membrane/materials.hpp"
#include "membrane/mesh.hpp"
#include "membrane/pneumatics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace membrane {

struct TargetStress {
    double sigma1 = 0.0; // material x (warp) or sheet X
    double sigma2 = 0.0; // material y (weft) or sheet Y
};

inline void validate(const TargetStress &t) {
    if (!(t.sigma1 > 0.0)) throw InvalidArgument("target.sigma1 must be positive (tension)");
    if (!(t.sigma2 > 0.0)) throw InvalidArgument("target.sigma2 must be positive (tension)");
}

struct LoopConfig {
    double c = 0.5;
    int max_steps = 20;
    /// Stop once the stress standard deviation is at most this in both
    /// directions; negative selects 0.02 x min(target).
    double stop_tol = -1.0;
    bool reproject_each_step = false;
    SolverConfig solver{};
    FitConfig fit{};
};

inline void validate(const LoopConfig &c) {
    if (!(c.c > 0.0 && c.c <= 2.0)) throw InvalidArgument("loop.c must lie in (0, 2]");
    if (c.max_steps < 1) throw InvalidArgument("loop.max_steps must be >= 1");
    validate(c.solver);
    validate(c.fit.solver);
}

struct DirectionStats {
    double average = 0.0;
    double max = 0.0;
    double min = 0.0;
    double stddev = 0.0;
};

struct StressStats {
    DirectionStats x; // first principal direction
    DirectionStats y; // second principal direction
};

/// Unweighted per-element statistics with the population standard deviation.
inline StressStats stress_statistics(const std::vector<Voigt> &stresses) {
    if (stresses.empty()) throw InvalidArgument("stress_statistics: no stresses");
    auto one = [&](int c) {
        DirectionStats d;
        d.min = d.max = stresses.front()[c];
        double sum = 0.0;
        for (const auto &s : stresses) {
            sum += s[c];
            d.min = std::min(d.min, s[c]);
            d.max = std::max(d.max, s[c]);
        }
        d.average = sum / double(stresses.size());
        double var = 0.0;
        for (const auto &s : stresses) var += (s[c] - d.average) * (s[c] - d.average);
        d.stddev = std::sqrt(var / double(stresses.size()));
        // keep min <= average <= max under round-off
        d.average = std::clamp(d.average, d.min, d.max);
        return d;
    };
    return {one(0), one(1)};
}

/// sigma_hat + c (target - achieved), element by element; shear stays zero.
inline ReductionStressField update_reduction_stress(const ReductionStressField &current,
                                                    const std::vector<Voigt> &achieved,
                                                    const TargetStress &target, double c) {
    if (current.size() != achieved.size())
        throw InvalidArgument("update_reduction_stress: field sizes differ");
    ReductionStressField next(current.size());
    for (std::size_t k = 0; k < current.size(); ++k) {
        next[k][0] = current[k][0] + c * (target.sigma1 - achieved[k][0]);
        next[k][1] = current[k][1] + c * (target.sigma2 - achieved[k][1]);
    }
    return next;
}

struct StepRecord {
    int step = 0;
    StressStats stats;
    SolverReport equilibrium;
    std::vector<SolverReport> fits;
    double pattern_F = 0.0; // summed over sheets
    bool warning = false;   // an inner solve did not converge
};

struct LoopResult {
    std::vector<PatternSheet> initial_patterns;
    std::vector<PatternSheet> patterns;
    SurfaceMesh equilibrium;
    std::vector<ReferenceElement> references;
    std::vector<Voigt> stresses;
    ReductionStressField reduction_stress;
    std::vector<StepRecord> history;

    bool any_warning() const {
        return std::any_of(history.begin(), history.end(),
                           [](const StepRecord &r) { return r.warning; });
    }
};

/// Failure of one stage of one outer step.
class StageError : public Error {
public:
    StageError(int step, const std::string &stage, const std::string &what)
        : Error("step " + std::to_string(step) + ", " + stage + ": " + what), step_(step),
          stage_(stage) {}

    int step() const noexcept { return step_; }
    const std::string &stage() const noexcept { return stage_; }

private:
    int step_;
    std::string stage_;
};

using StepCallback = std::function<void(const StepRecord &)>;

namespace detail {

template <class F>
auto run_stage(int step, const char *stage, F &&f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError &) {
        throw;
    } catch (const std::exception &e) {
        throw StageError(step, stage, e.what());
    }
}

} // namespace detail

inline std::vector<PatternSheet> project_all(const SurfaceMesh &mesh, const ProjectionMode &mode) {
    std::vector<PatternSheet> out;
    for (int s = 0; s < mesh.sheet_count(); ++s) out.push_back(project_to_plane(mesh, s, mode));
    return out;
}

/// Runs steps 0..max_steps (fewer when the stress spread drops below
/// stop_tol). Step 0 uses the target stress as the reduction stress; after
/// every step the equilibrium surface becomes the next target surface.
inline LoopResult run_pattern_optimization(const SurfaceMesh &target, const MaterialModel &mat,
                                           const TargetStress &target_stress,
                                           const std::optional<PressureLoad> &load,
                                           const ProjectionMode &projection,
                                           const LoopConfig &cfg,
                                           const StepCallback &on_step = {}) {
    validate(target);
    validate(target_stress);
    validate(cfg);
    if (load) validate(*load);
    const double stop_tol =
        cfg.stop_tol >= 0.0 ? cfg.stop_tol : 0.02 * std::min(target_stress.sigma1, target_stress.sigma2);

    LoopResult out;
    SurfaceMesh surface = target;
    ReductionStressField sigma_hat(surface.elements.size(),
                                   Eigen::Vector2d(target_stress.sigma1, target_stress.sigma2));

    std::vector<PatternSheet> patterns =
        detail::run_stage(0, "projection", [&] { return project_all(surface, projection); });
    out.initial_patterns = patterns;
    apply_material_angles(surface, patterns);

    for (int step = 0; step <= cfg.max_steps; ++step) {
        StepRecord rec;
        rec.step = step;

        if (step > 0 && cfg.reproject_each_step) {
            patterns = detail::run_stage(step, "projection",
                                         [&] { return project_all(surface, projection); });
            apply_material_angles(surface, patterns);
        }

        const UnstressedLengths L0 = detail::run_stage(step, "strain removal", [&] {
            return surface_unstressed_lengths(surface, mat, sigma_hat);
        });

        for (auto &ps : patterns) {
            FitResult fit = detail::run_stage(step, "pattern fit", [&] {
                return fit_pattern(ps, sheet_lengths(L0, ps), cfg.fit);
            });
            rec.pattern_F += fit.F;
            rec.warning |= !fit.report.converged;
            rec.fits.push_back(fit.report);
            ps = std::move(fit.sheet);
        }
        apply_material_angles(surface, patterns);

        const auto refs = detail::run_stage(step, "reference geometry", [&] {
            return references_from_patterns(surface, patterns);
        });
        EquilibriumResult eq = detail::run_stage(step, "equilibrium", [&] {
            return minimize_energy(surface, refs, mat, load, cfg.solver);
        });
        rec.equilibrium = eq.report;
        rec.warning |= !eq.report.converged;

        out.stresses = detail::run_stage(step, "stress recovery",
                                         [&] { return recover_stresses(eq.surface, refs, mat); });
        rec.stats = stress_statistics(out.stresses);
        out.history.push_back(rec);
        if (on_step) on_step(out.history.back());

        out.equilibrium = eq.surface;
        out.references = refs;
        out.reduction_stress = sigma_hat;
        out.patterns = patterns;

        const bool settled = rec.stats.x.stddev <= stop_tol && rec.stats.y.stddev <= stop_tol;
        if (settled || step == cfg.max_steps) break;

        sigma_hat = update_reduction_stress(sigma_hat, out.stresses, target_stress, cfg.c);
        surface = std::move(eq.surface);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Single-cable illustration
// ---------------------------------------------------------------------------

struct CableStep {
    int step = 0;
    double reduction_stress = 0.0;
    double unstressed_length = 0.0;
    double stress = 0.0;
};

struct CableProblem {
    double span = 1.2;         // length at equilibrium
    double guess_length = 1.0; // assumed equilibrium length used for strain removal
    double target = 0.1;
    double c = 1.0;
    double E = 1.0;
    int steps = 3;
};

/// Scalar analogue of the loop: L0 = guess (1 - sigma_hat/E),
/// sigma = E (span - L0)/L0, sigma_hat += c (target - sigma).
inline std::vector<CableStep> cable_demo(const CableProblem &p = {}) {
    std::vector<CableStep> out;
    double sigma_hat = p.target;
    for (int s = 1; s <= p.steps; ++s) {
        CableStep st;
        st.step = s;
        st.reduction_stress = sigma_hat;
        st.unstressed_length = p.guess_length * (1.0 - sigma_hat / p.E);
        st.stress = p.E * (p.span - st.unstressed_length) / st.unstressed_length;
        out.push_back(st);
        sigma_hat += p.c * (p.target - st.stress);
    }
    return out;
}

} // namespace membrane
