#include "membrane/pneumatics.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace membrane;
using membrane::testing::single_triangle;
using membrane::testing::unit_tetrahedron;

namespace {

SurfaceMesh random_cushion(std::mt19937_64 &rng) {
    auto m = generate_square_cushion_mesh(10.0, 0.58, 8);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (Index i = 0; i < m.node_count(); ++i)
        if (!m.is_fully_fixed(i)) m.nodes[i] += Vec3(u(rng), u(rng), u(rng));
    return m;
}

} // namespace

TEST(Volume, UnitTetrahedron) {
    EXPECT_NEAR(enclosed_volume(unit_tetrahedron()), 1.0 / 6.0, 1e-14);
}

TEST(Volume, FlatMeshIsZero) {
    EXPECT_EQ(enclosed_volume(generate_square_cushion_mesh(10.0, 0.0, 6)), 0.0);
}

TEST(Volume, SingleTriangleSummand) {
    const double h = 2.5;
    const auto m = single_triangle({0, 0, h}, {3, 0, h}, {0, 2, h});
    EXPECT_NEAR(enclosed_volume(m), 3.0 * h / 3.0, 1e-14);
}

TEST(Volume, TranslationInvariantWhenClosed) {
    auto m = unit_tetrahedron();
    for (auto &p : m.nodes) p += Vec3(3, -2, 7);
    EXPECT_NEAR(enclosed_volume(m), 1.0 / 6.0, 1e-13);
}

TEST(PressurePotential, Examples) {
    const auto tet = unit_tetrahedron();
    EXPECT_EQ(pressure_potential(tet, {0.0}), 0.0);
    EXPECT_NEAR(pressure_potential(tet, {6.0}), 1.0, 1e-14);
    auto m = generate_square_cushion_mesh(10.0, 0.58, 6);
    const double W = pressure_potential(m, {1.0});
    for (auto &p : m.nodes) p *= 2.0;
    EXPECT_NEAR(pressure_potential(m, {1.0}), 8.0 * W, 1e-12 * W);
    EXPECT_THROW(pressure_potential(m, {-1.0}), InvalidArgument);
}

TEST(NodalForces, FlatSquareResultant) {
    const auto m = generate_square_cushion_mesh(10.0, 0.0, 5);
    Vec3 total = Vec3::Zero();
    for (const auto &f : pressure_nodal_forces(m, {1.0})) total += f;
    EXPECT_LT((total - Vec3(0, 0, 100.0)).norm(), 1e-12);
}

TEST(NodalForces, SingleTriangle) {
    const auto m = single_triangle({0, 0, 0}, {2, 0, 0}, {0, 3, 0});
    for (const auto &f : pressure_nodal_forces(m, {1.5}))
        EXPECT_LT((f - Vec3(0, 0, 1.5 * 3.0 / 3.0)).norm(), 1e-15);
}

TEST(NodalForces, ClosedMeshIsSelfEquilibrated) {
    Vec3 total = Vec3::Zero();
    for (const auto &f : pressure_nodal_forces(unit_tetrahedron(), {2.0})) total += f;
    EXPECT_LT(total.norm(), 1e-15);
}

TEST(NodalForces, EqualPressureTimesVolumeGradientAtInteriorNodes) {
    std::mt19937_64 rng(9);
    const double p = 1.0, h = 1e-4;
    for (int trial = 0; trial < 3; ++trial) {
        SurfaceMesh m = random_cushion(rng);
        const auto f = pressure_nodal_forces(m, {p});
        const Eigen::VectorXd gv = volume_gradient(m);
        for (Index i = 0; i < m.node_count(); ++i) {
            if (m.is_fully_fixed(i)) continue;
            for (int j = 0; j < 3; ++j) {
                const double x0 = m.nodes[i][j];
                m.nodes[i][j] = x0 + h;
                const double vp = enclosed_volume(m);
                m.nodes[i][j] = x0 - h;
                const double vm = enclosed_volume(m);
                m.nodes[i][j] = x0;
                // V is linear in any single coordinate: the difference is exact
                // up to round-off.
                const double fd = p * (vp - vm) / (2 * h);
                EXPECT_LT(std::abs(f[i][j] - fd), 1e-8 * std::max(1.0, std::abs(fd)));
                EXPECT_NEAR(f[i][j], p * gv[3 * i + j], 1e-12);
            }
        }
    }
}
