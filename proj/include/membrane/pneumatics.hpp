#pragma once

// Constant-pressure loading. The enclosed volume is the divergence-theorem
// sum over membrane elements; the fixed-boundary closure surface is left out,
// which shifts V by a constant and leaves every free-node derivative alone.

#include "membrane/common.hpp"
#include "membrane/mesh.hpp"

#include <vector>

namespace membrane {

struct PressureLoad {
    double p = 0.0; // kN/m^2
};

inline void validate(const PressureLoad &load) {
    if (!(load.p >= 0.0)) throw InvalidArgument("pressure must be non-negative");
}

/// V = 1/3 sum_k A_k n_k . centroid_k, normals by winding (outward).
inline double enclosed_volume(const SurfaceMesh &mesh) {
    double v = 0.0;
    for (Index k = 0; k < mesh.element_count(); ++k) {
        const auto [p1, p2, p3] = mesh.corners(k);
        v += triangle_area_vector(p1, p2, p3).dot(p1 + p2 + p3) / 9.0;
    }
    return v;
}

inline double pressure_potential(const SurfaceMesh &mesh, const PressureLoad &load) {
    validate(load);
    return load.p * enclosed_volume(mesh);
}

/// f_i = p/3 sum_{k incident to i} A_k n_k, for every node.
inline std::vector<Vec3> pressure_nodal_forces(const SurfaceMesh &mesh, const PressureLoad &load) {
    validate(load);
    std::vector<Vec3> f(mesh.nodes.size(), Vec3::Zero());
    for (Index k = 0; k < mesh.element_count(); ++k) {
        const auto [p1, p2, p3] = mesh.corners(k);
        const Vec3 fk = (load.p / 3.0) * triangle_area_vector(p1, p2, p3);
        for (Index n : mesh.elements[k].nodes) f[n] += fk;
    }
    return f;
}

/// Exact gradient of enclosed_volume, laid out as [x0 y0 z0 x1 ...]. Equals
/// the nodal-force direction sum A_k n_k / 3 at every node with a closed fan.
inline Eigen::VectorXd volume_gradient(const SurfaceMesh &mesh) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(3 * mesh.node_count());
    for (Index k = 0; k < mesh.element_count(); ++k) {
        const auto &n = mesh.elements[k].nodes;
        const auto [p1, p2, p3] = mesh.corners(k);
        // V_k = p1 . (p2 x p3) / 6
        g.segment<3>(3 * n[0]) += p2.cross(p3) / 6.0;
        g.segment<3>(3 * n[1]) += p3.cross(p1) / 6.0;
        g.segment<3>(3 * n[2]) += p1.cross(p2) / 6.0;
    }
    return g;
}

} // namespace membrane
