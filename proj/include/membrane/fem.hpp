#pragma once

// Corotational constant-strain triangles. Each element is measured in its own
// frame (origin at node 1, x toward node 2, y toward node 3), so rigid-body
// motion drops out before the small-strain relation is applied.

#include "membrane/common.hpp"
#include "membrane/materials.hpp"
#include "membrane/mesh.hpp"

#include <cmath>
#include <vector>

namespace membrane {

/// Unstressed local geometry: node 2 at (a, 0), node 3 at (b, h).
struct ReferenceElement {
    double a = 0.0;
    double b = 0.0;
    double h = 0.0;

    double area() const { return 0.5 * a * h; }
};

namespace detail {

template <class V>
ReferenceElement local_coords(const V &p1, const V &p2, const V &p3, Index element) {
    const V q = p2 - p1, d = p3 - p1;
    const double a = q.norm();
    if (!(a > 0.0)) throw DegenerateElement(element, "coincident nodes 1 and 2");
    const double b = d.dot(q) / a;
    const double h2 = d.squaredNorm() - b * b;
    const double h = h2 > 0.0 ? std::sqrt(h2) : 0.0;
    if (!(0.5 * a * h > kDegenerateArea)) throw DegenerateElement(element, "degenerate triangle");
    return {a, b, h};
}

} // namespace detail

inline ReferenceElement local_coords(const Vec3 &p1, const Vec3 &p2, const Vec3 &p3,
                                     Index element = -1) {
    return detail::local_coords(p1, p2, p3, element);
}

inline ReferenceElement local_coords(const Vec2 &p1, const Vec2 &p2, const Vec2 &p3,
                                     Index element = -1) {
    return detail::local_coords(p1, p2, p3, element);
}

/// Maps u = (u2, u3, v3) to (eps_x, eps_y, gamma) in the element frame.
inline Mat3 strain_displacement_matrix(const ReferenceElement &r) {
    Mat3 C;
    C << 1.0 / r.a, 0.0, 0.0,
         0.0, 0.0, 1.0 / r.h,
         -r.b / (r.a * r.h), 1.0 / r.h, 0.0;
    return C;
}

inline Vec3 relative_displacements(const ReferenceElement &ref, const Vec3 &p1, const Vec3 &p2,
                                   const Vec3 &p3, Index element = -1) {
    const ReferenceElement cur = local_coords(p1, p2, p3, element);
    return {cur.a - ref.a, cur.b - ref.b, cur.h - ref.h};
}

/// Engineering-strain transformation into axes rotated by theta.
inline Mat3 strain_rotation(double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    Mat3 T;
    T << c * c, s * s, s * c,
         s * s, c * c, -s * c,
         -2.0 * s * c, 2.0 * s * c, c * c - s * s;
    return T;
}

inline Voigt rotate_strain(const Voigt &eps, double theta) { return strain_rotation(theta) * eps; }

/// Stress (tensor-shear) counterpart of strain_rotation.
inline Voigt rotate_stress(const Voigt &sig, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    Mat3 T;
    T << c * c, s * s, 2.0 * s * c,
         s * s, c * c, -2.0 * s * c,
         -s * c, s * c, c * c - s * s;
    return T * sig;
}

/// Strain in the material principal axes, which sit at `theta` from the
/// element x-axis.
inline Voigt element_strain(const ReferenceElement &ref, const Vec3 &p1, const Vec3 &p2,
                            const Vec3 &p3, double theta, Index element = -1) {
    return rotate_strain(strain_displacement_matrix(ref) *
                             relative_displacements(ref, p1, p2, p3, element),
                         theta);
}

inline void check_references(const SurfaceMesh &mesh, const std::vector<ReferenceElement> &refs) {
    if (static_cast<Index>(refs.size()) != mesh.element_count())
        throw InvalidArgument("reference elements do not cover the mesh");
}

inline Voigt element_strain(const SurfaceMesh &mesh, const std::vector<ReferenceElement> &refs,
                            Index k) {
    const auto [p1, p2, p3] = mesh.corners(k);
    return element_strain(refs[k], p1, p2, p3, mesh.elements[k].material_angle, k);
}

inline double element_energy(const SurfaceMesh &mesh, const std::vector<ReferenceElement> &refs,
                             const MaterialModel &mat, Index k) {
    return refs[k].area() * mat.energy_density(element_strain(mesh, refs, k));
}

/// Sum over elements of reference area times strain energy density.
inline double total_strain_energy(const SurfaceMesh &mesh,
                                  const std::vector<ReferenceElement> &refs,
                                  const MaterialModel &mat) {
    check_references(mesh, refs);
    double s = 0.0;
    for (Index k = 0; k < mesh.element_count(); ++k) s += element_energy(mesh, refs, mat, k);
    return s;
}

/// Gradient of total_strain_energy with respect to every nodal coordinate,
/// laid out as [x0 y0 z0 x1 ...].
inline Eigen::VectorXd strain_energy_gradient(const SurfaceMesh &mesh,
                                              const std::vector<ReferenceElement> &refs,
                                              const MaterialModel &mat) {
    check_references(mesh, refs);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(3 * mesh.node_count());
    for (Index k = 0; k < mesh.element_count(); ++k) {
        const auto &tri = mesh.elements[k];
        const auto [p1, p2, p3] = mesh.corners(k);
        const ReferenceElement &ref = refs[k];
        const ReferenceElement cur = local_coords(p1, p2, p3, k);
        const Vec3 u(cur.a - ref.a, cur.b - ref.b, cur.h - ref.h);
        const Mat3 C = strain_displacement_matrix(ref);
        const Mat3 T = strain_rotation(tri.material_angle);
        const Voigt eps = T * (C * u);
        // dE/d(a, b, h)
        const Vec3 gu = ref.area() * (C.transpose() * (T.transpose() * mat.energy_gradient(eps)));

        const Vec3 e1 = (p2 - p1) / cur.a;
        const Vec3 f2 = ((p3 - p1) - cur.b * e1) / cur.h;
        const Vec3 g3 = gu[1] * e1 + gu[2] * f2;
        const Vec3 g2 = gu[0] * e1 + ((gu[1] * cur.h - gu[2] * cur.b) / cur.a) * f2;
        g.segment<3>(3 * tri.nodes[0]) -= g2 + g3;
        g.segment<3>(3 * tri.nodes[1]) += g2;
        g.segment<3>(3 * tri.nodes[2]) += g3;
    }
    return g;
}

/// Per-element stress in the material principal axes.
inline std::vector<Voigt> recover_stresses(const SurfaceMesh &mesh,
                                           const std::vector<ReferenceElement> &refs,
                                           const MaterialModel &mat) {
    check_references(mesh, refs);
    std::vector<Voigt> out;
    out.reserve(mesh.elements.size());
    for (Index k = 0; k < mesh.element_count(); ++k)
        out.push_back(mat.stress(element_strain(mesh, refs, k)));
    return out;
}

inline std::vector<Voigt> recover_strains(const SurfaceMesh &mesh,
                                          const std::vector<ReferenceElement> &refs) {
    check_references(mesh, refs);
    std::vector<Voigt> out;
    out.reserve(mesh.elements.size());
    for (Index k = 0; k < mesh.element_count(); ++k) out.push_back(element_strain(mesh, refs, k));
    return out;
}

/// Reference elements taken from the current geometry (zero strain state).
inline std::vector<ReferenceElement> references_from_surface(const SurfaceMesh &mesh) {
    std::vector<ReferenceElement> out;
    for (Index k = 0; k < mesh.element_count(); ++k) {
        const auto [p1, p2, p3] = mesh.corners(k);
        out.push_back(local_coords(p1, p2, p3, k));
    }
    return out;
}

} // namespace membrane
