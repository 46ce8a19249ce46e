#pragma once

// Equilibrium shape analysis: minimize S(X), or S(X) - pV(X) under pressure,
// over the free nodal coordinates.

#include "membrane/common.hpp"
#include "membrane/fem.hpp"
#include "membrane/materials.hpp"
#include "membrane/mesh.hpp"
#include "membrane/optimizer.hpp"
#include "membrane/pneumatics.hpp"

#include <cmath>
#include <optional>
#include <ostream>
#include <vector>

namespace membrane {

/// Free coordinates of a surface mesh; fixed coordinates are eliminated.
struct DofMap {
    std::vector<Index> free; // indices into the [x0 y0 z0 x1 ...] layout

    static DofMap from_mesh(const SurfaceMesh &mesh) {
        DofMap m;
        for (Index i = 0; i < mesh.node_count(); ++i)
            for (int j = 0; j < 3; ++j)
                if (!mesh.fixed[i][j]) m.free.push_back(3 * i + j);
        return m;
    }

    Index size() const { return static_cast<Index>(free.size()); }

    Eigen::VectorXd gather(const SurfaceMesh &mesh) const {
        Eigen::VectorXd x(size());
        for (Index k = 0; k < size(); ++k) x[k] = mesh.nodes[free[k] / 3][free[k] % 3];
        return x;
    }

    void scatter(const Eigen::VectorXd &x, SurfaceMesh &mesh) const {
        for (Index k = 0; k < size(); ++k) mesh.nodes[free[k] / 3][free[k] % 3] = x[k];
    }

    Eigen::VectorXd restrict(const Eigen::VectorXd &full) const {
        Eigen::VectorXd r(size());
        for (Index k = 0; k < size(); ++k) r[k] = full[free[k]];
        return r;
    }

    std::optional<BoxBounds> bounds(const SurfaceMesh &mesh) const {
        if (!mesh.bounds) return std::nullopt;
        BoxBounds b{Eigen::VectorXd(size()), Eigen::VectorXd(size())};
        for (Index k = 0; k < size(); ++k) {
            b.lower[k] = mesh.bounds->lower[free[k] / 3][free[k] % 3];
            b.upper[k] = mesh.bounds->upper[free[k] / 3][free[k] % 3];
        }
        return b;
    }
};

/// 1e-8 x (mean normal stiffness x sqrt(mean reference element area)), in kN.
inline double default_equilibrium_tolerance(const std::vector<ReferenceElement> &refs,
                                            const MaterialModel &mat) {
    double area = 0.0;
    for (const auto &r : refs) area += r.area();
    area /= std::max<std::size_t>(1, refs.size());
    return 1e-8 * mat.reference_stiffness() * std::sqrt(area);
}

/// Pi = S - pV (S alone without a load).
inline double total_potential(const SurfaceMesh &mesh, const std::vector<ReferenceElement> &refs,
                              const MaterialModel &mat, const std::optional<PressureLoad> &load) {
    double pi = total_strain_energy(mesh, refs, mat);
    if (load) pi -= pressure_potential(mesh, *load);
    return pi;
}

inline Eigen::VectorXd total_potential_gradient(const SurfaceMesh &mesh,
                                                const std::vector<ReferenceElement> &refs,
                                                const MaterialModel &mat,
                                                const std::optional<PressureLoad> &load) {
    Eigen::VectorXd g = strain_energy_gradient(mesh, refs, mat);
    if (load) g -= load->p * volume_gradient(mesh);
    return g;
}

/// Objective over the free coordinates, evaluated on a private copy of mesh.
inline Objective equilibrium_objective(const SurfaceMesh &mesh,
                                       const std::vector<ReferenceElement> &refs,
                                       const MaterialModel &mat,
                                       const std::optional<PressureLoad> &load) {
    const DofMap dofs = DofMap::from_mesh(mesh);
    return [work = mesh, dofs, &refs, &mat, load](const Eigen::VectorXd &x,
                                                  Eigen::VectorXd &grad) mutable {
        dofs.scatter(x, work);
        grad = dofs.restrict(total_potential_gradient(work, refs, mat, load));
        return total_potential(work, refs, mat, load);
    };
}

/// grad S - f over the free coordinates, with f the consistent pressure
/// nodal forces.
inline Eigen::VectorXd equilibrium_residual(const SurfaceMesh &mesh,
                                            const std::vector<ReferenceElement> &refs,
                                            const MaterialModel &mat,
                                            const std::optional<PressureLoad> &load) {
    Eigen::VectorXd r = strain_energy_gradient(mesh, refs, mat);
    if (load) {
        const auto f = pressure_nodal_forces(mesh, *load);
        for (Index i = 0; i < mesh.node_count(); ++i) r.segment<3>(3 * i) -= f[i];
    }
    return DofMap::from_mesh(mesh).restrict(r);
}

struct EquilibriumResult {
    SurfaceMesh surface;
    SolverReport report;
};

/// Equilibrium shape for the reference geometry `refs` starting from `start`.
/// Fixed coordinates stay where `start` has them.
inline EquilibriumResult minimize_energy(const SurfaceMesh &start,
                                         const std::vector<ReferenceElement> &refs,
                                         const MaterialModel &mat,
                                         const std::optional<PressureLoad> &load,
                                         const SolverConfig &cfg, std::ostream *log = nullptr) {
    check_references(start, refs);
    if (load) validate(*load);
    const DofMap dofs = DofMap::from_mesh(start);
    if (!load && 3 * start.node_count() - dofs.size() < 6)
        throw InvalidArgument("minimize_energy: fixed coordinates do not remove rigid-body modes");

    const double tol = cfg.grad_tol > 0.0 ? cfg.grad_tol : default_equilibrium_tolerance(refs, mat);
    MinimizeResult res = minimize_lbfgs(equilibrium_objective(start, refs, mat, load),
                                        dofs.gather(start), dofs.bounds(start), cfg, tol, log);
    EquilibriumResult out{start, res.report};
    dofs.scatter(res.x, out.surface);
    out.report.residual_norm =
        inf_norm(equilibrium_residual(out.surface, refs, mat, load));
    return out;
}

} // namespace membrane
