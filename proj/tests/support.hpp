#pragma once

#include "membrane/mesh.hpp"

#include <Eigen/Geometry>

#include <random>

namespace membrane::testing {

inline Mat3 random_rotation(std::mt19937_64 &rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    return q.normalized().toRotationMatrix();
}

/// One-triangle mesh with all nodes fixed.
inline SurfaceMesh single_triangle(const Vec3 &p1, const Vec3 &p2, const Vec3 &p3) {
    SurfaceMesh m;
    m.nodes = {p1, p2, p3};
    m.elements = {Triangle{{0, 1, 2}, 0.0}};
    m.fixed.assign(3, {true, true, true});
    m.element_sheet = {0};
    return m;
}

/// Flat W x W grid at z = 0, boundary fixed, one sheet.
inline SurfaceMesh flat_sheet(double width, int divisions) {
    return generate_square_cushion_mesh(width, 0.0, divisions);
}

/// Closed tetrahedron (0,0,0),(1,0,0),(0,1,0),(0,0,1) with outward normals.
inline SurfaceMesh unit_tetrahedron() {
    SurfaceMesh m;
    m.nodes = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
    m.elements = {Triangle{{0, 2, 1}, 0.0}, Triangle{{0, 1, 3}, 0.0}, Triangle{{0, 3, 2}, 0.0},
                  Triangle{{1, 2, 3}, 0.0}};
    m.fixed.assign(4, {false, false, false});
    m.element_sheet.assign(4, 0);
    return m;
}

} // namespace membrane::testing
