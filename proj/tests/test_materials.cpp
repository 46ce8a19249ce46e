#include "membrane/fem.hpp"
#include "membrane/materials.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <numbers>
#include <random>

using namespace membrane;

namespace {

OrthotropicElastic pvc() { return {243.0, 227.0, 24.2, 0.51, 0.55}; }
EtfeBilinear etfe() { return {160.0, 10.4, 55.2, 0.45, 3.2, 0.02}; }

Voigt fd_energy_gradient(const MaterialModel &m, const Voigt &eps, double h) {
    Voigt g;
    for (int i = 0; i < 3; ++i) {
        Voigt p = eps, q = eps;
        p[i] += h;
        q[i] -= h;
        g[i] = (m.energy_density(p) - m.energy_density(q)) / (2 * h);
    }
    return g;
}

} // namespace

TEST(Orthotropic, DecoupledCaseIsDiagonal) {
    const Mat3 D = constitutive_matrix(OrthotropicElastic{100.0, 100.0, 30.0, 0.0, {}});
    EXPECT_TRUE(D.isApprox(Eigen::Vector3d(100, 100, 30).asDiagonal().toDenseMatrix()));
}

TEST(Orthotropic, PvcFabricEntries) {
    // Hand evaluation: beta = 243/227, den = 1 - beta 0.51^2.
    const double beta = 243.0 / 227.0, den = 1.0 - beta * 0.51 * 0.51;
    const Mat3 D = constitutive_matrix(pvc());
    EXPECT_NEAR(D(0, 0), 227.0 * beta / den, 1e-12);
    EXPECT_NEAR(D(0, 0), 336.8, 0.05);
    EXPECT_NEAR(D(1, 1), 314.6, 0.05);
    EXPECT_NEAR(D(0, 1), 171.8, 0.05);
    EXPECT_DOUBLE_EQ(D(2, 2), 24.2);
    EXPECT_EQ(D(0, 2), 0.0);
    EXPECT_EQ(D(1, 2), 0.0);
}

TEST(Orthotropic, SymmetricPositiveDefinite) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> E(50.0, 500.0), nu(0.0, 0.6);
    for (int i = 0; i < 50; ++i) {
        OrthotropicElastic m{E(rng), E(rng), 0.1 * E(rng), nu(rng), {}};
        if (1.0 - m.beta() * m.nu_xy * m.nu_xy <= 0.0) continue;
        const Mat3 D = constitutive_matrix(m);
        EXPECT_TRUE(D.isApprox(D.transpose(), 0.0));
        EXPECT_GT(Eigen::SelfAdjointEigenSolver<Mat3>(D).eigenvalues().minCoeff(), 0.0);
    }
}

TEST(Orthotropic, InvalidParametersRejected) {
    EXPECT_THROW(constitutive_matrix(OrthotropicElastic{-1.0, 227.0, 24.2, 0.51, {}}), MaterialError);
    EXPECT_THROW(constitutive_matrix(OrthotropicElastic{243.0, 227.0, 24.2, 1.2, {}}), MaterialError);
    EXPECT_THROW(constitutive_matrix(OrthotropicElastic{243.0, 227.0, 24.2, 0.51, 0.3}), MaterialError);
}

TEST(Etfe, PlaneStressMatrix) {
    const Mat3 D = etfe_elastic_matrix(etfe());
    EXPECT_NEAR(D(0, 0), 160.0 / (1.0 - 0.2025), 1e-12);
    EXPECT_NEAR(D(0, 0), 200.6, 0.05);
    EXPECT_DOUBLE_EQ(D(2, 2), 55.2);
    const Mat3 D0 = etfe_elastic_matrix(EtfeBilinear{160.0, 10.4, 80.0, 0.0, 3.2, {}});
    EXPECT_TRUE(D0.isApprox(Eigen::Vector3d(160, 160, 80).asDiagonal().toDenseMatrix()));
}

TEST(Etfe, InvalidParametersRejected) {
    auto m = etfe();
    m.H = 200.0;
    EXPECT_THROW(etfe_elastic_matrix(m), MaterialError);
    m = etfe();
    m.G_e = 20.0;
    EXPECT_THROW(etfe_elastic_matrix(m), MaterialError);
    m = etfe();
    m.sigma_Y = 0.0;
    EXPECT_THROW(etfe_elastic_matrix(m), MaterialError);
}

TEST(EquivalentStress, ReferenceStates) {
    EXPECT_DOUBLE_EQ(equivalent_stress(Voigt(3.2, 0, 0)), 3.2);
    EXPECT_EQ(equivalent_stress(Voigt(4, 4, 0)), 4.0);
    EXPECT_DOUBLE_EQ(equivalent_stress(Voigt(0, 0, 1)), std::sqrt(3.0));
}

TEST(EquivalentStress, RotationInvariant) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-10.0, 10.0), th(-std::numbers::pi, std::numbers::pi);
    for (int i = 0; i < 200; ++i) {
        const Voigt s(u(rng), u(rng), u(rng));
        const double eq = equivalent_stress(s);
        EXPECT_NEAR(equivalent_stress(rotate_stress(s, th(rng))), eq, 1e-10 * eq);
    }
}

TEST(Etfe, ZeroStrain) {
    const auto r = etfe_stress(Voigt::Zero(), etfe());
    EXPECT_EQ(r.sigma, Voigt::Zero());
    EXPECT_FALSE(r.yielded);
    EXPECT_EQ(etfe_energy_density(Voigt::Zero(), etfe()), 0.0);
}

TEST(Etfe, ContinuousAtYield) {
    const auto m = etfe();
    const Mat3 D = etfe_elastic_matrix(m);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        Voigt dir(n(rng), n(rng), n(rng));
        const Voigt on = dir * (m.sigma_Y / equivalent_stress(D * dir));
        const Voigt below = on * (1.0 - 1e-12), above = on * (1.0 + 1e-12);
        const auto sb = etfe_stress(below, m), sa = etfe_stress(above, m);
        EXPECT_FALSE(sb.yielded);
        EXPECT_TRUE(sa.yielded);
        EXPECT_LT((sa.sigma - sb.sigma).cwiseAbs().maxCoeff(), 1e-6);
        EXPECT_NEAR(etfe_energy_density(above, m), etfe_energy_density(below, m), 1e-12);
    }
}

TEST(Etfe, EquibiaxialYieldedState) {
    // Closed form for eps = (e, e, 0): trial components t = e E/(1 - nu), von Mises of
    // an equibiaxial state equals t, stress = (1 - eta) sigma_Y + eta t per component.
    const auto m = etfe();
    const double e = 0.05, t = e * 160.0 / (1.0 - 0.45), eta = 10.4 / 160.0;
    EXPECT_GT(t, 3.2);
    const auto r = etfe_stress(Voigt(e, e, 0), m);
    EXPECT_TRUE(r.yielded);
    const double expected = (1.0 - eta) * 3.2 + eta * t;
    EXPECT_NEAR(r.sigma[0], expected, 1e-12);
    EXPECT_NEAR(r.sigma[1], expected, 1e-12);
    EXPECT_NEAR(r.sigma[2], 0.0, 1e-15);
    EXPECT_NEAR(expected, 3.9375, 1e-3);
}

TEST(Etfe, RadialHardeningSlope) {
    const auto m = etfe();
    const Mat3 D = etfe_elastic_matrix(m);
    const Voigt eps(0.03, 0.01, 0.02);
    const double trial = equivalent_stress(D * eps);
    ASSERT_GT(trial, m.sigma_Y);
    const double s1 = equivalent_stress(etfe_stress(eps, m).sigma);
    for (double lambda : {1.1, 1.5, 3.0}) {
        const double s = equivalent_stress(etfe_stress(lambda * eps, m).sigma);
        EXPECT_NEAR((s - s1) / ((lambda - 1.0) * trial), m.H / m.E, 1e-12);
    }
}

TEST(Etfe, ElasticEnergyIsQuadratic) {
    const auto m = etfe();
    const Mat3 D = etfe_elastic_matrix(m);
    const Voigt eps(0.004, -0.002, 0.003);
    ASSERT_LT(equivalent_stress(D * eps), m.sigma_Y);
    EXPECT_NEAR(etfe_energy_density(eps, m), 0.5 * eps.dot(D * eps), 1e-16);
}

TEST(Etfe, EnergyDerivativeMatchesFiniteDifference) {
    const MaterialModel mat(etfe());
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-0.08, 0.08);
    int yielded = 0;
    for (int i = 0; i < 200; ++i) {
        const Voigt eps(u(rng), u(rng), u(rng));
        yielded += etfe_stress(eps, etfe()).yielded;
        const Voigt fd = fd_energy_gradient(mat, eps, 1e-7);
        const Voigt g = mat.energy_gradient(eps);
        EXPECT_LT((fd - g).cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, g.cwiseAbs().maxCoeff()));
    }
    EXPECT_GT(yielded, 100);
}

TEST(Etfe, EnergyGradientIsStressOnRadialStates) {
    // The gradient equals the secant stress in the elastic range and on
    // equibiaxial paths, where the flow direction is radial.
    const auto m = etfe();
    const MaterialModel mat(m);
    for (const Voigt &eps : {Voigt(0.004, -0.002, 0.003), Voigt(0.05, 0.05, 0.0), Voigt(0.1, 0.1, 0.0)})
        EXPECT_LT((mat.energy_gradient(eps) - etfe_stress(eps, m).sigma).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Orthotropic, EnergyGradientIsStress) {
    const MaterialModel mat(pvc());
    const Voigt eps(0.01, -0.004, 0.02);
    EXPECT_TRUE(mat.energy_gradient(eps).isApprox(mat.stress(eps)));
    EXPECT_LT((fd_energy_gradient(mat, eps, 1e-6) - mat.stress(eps)).norm(), 1e-8);
}

TEST(Materials, StrainForStressInvertsStress) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-0.08, 0.08);
    for (const MaterialModel &mat : {MaterialModel(pvc()), MaterialModel(etfe())})
        for (int i = 0; i < 100; ++i) {
            const Voigt eps(u(rng), u(rng), u(rng));
            EXPECT_LT((mat.strain_for_stress(mat.stress(eps)) - eps).cwiseAbs().maxCoeff(), 1e-12)
                << mat.name();
        }
}

TEST(Materials, StressIsHomogeneousInElasticRange) {
    const MaterialModel mat(pvc());
    const Voigt eps(0.01, 0.003, -0.002);
    EXPECT_TRUE(mat.stress(2.5 * eps).isApprox(2.5 * mat.stress(eps)));
}
