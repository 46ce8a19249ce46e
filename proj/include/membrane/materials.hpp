#pragma once

// Membrane constitutive models. Stresses are stress resultants (kN/m) and
// stiffnesses are per unit width (kN/m); strains are dimensionless with
// engineering shear.

#include "membrane/common.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <variant>

namespace membrane {

/// Orthotropic linear elastic fabric; x is warp, y is weft.
struct OrthotropicElastic {
    double E_x = 0.0;
    double E_y = 0.0;
    double G = 0.0;
    double nu_xy = 0.0;
    std::optional<double> nu_yx; // only checked for reciprocity

    double beta() const { return E_x / E_y; }
    double kappa() const { return G / E_y; }
};

/// Bilinear nonlinear-elastic film (monotonic loading only).
struct EtfeBilinear {
    double E = 0.0;       // elastic modulus
    double H = 0.0;       // hardening coefficient (post-yield modulus)
    double G_e = 0.0;     // elastic shear modulus
    double nu = 0.0;
    double sigma_Y = 0.0; // yield stress
    std::optional<double> eps_Y_uni;

    double hardening_ratio() const { return H / E; }
};

inline void validate(const OrthotropicElastic &m) {
    if (!(m.E_x > 0.0)) throw MaterialError("orthotropic: E_x must be positive");
    if (!(m.E_y > 0.0)) throw MaterialError("orthotropic: E_y must be positive");
    if (!(m.G > 0.0)) throw MaterialError("orthotropic: G must be positive");
    if (!(1.0 - m.beta() * m.nu_xy * m.nu_xy > 0.0))
        throw MaterialError("orthotropic: 1 - beta*nu_xy^2 must be positive");
    // Reciprocity in the convention of the D matrix below: nu_yx = nu_xy E_x / E_y.
    if (m.nu_yx && std::abs(*m.nu_yx - m.nu_xy * m.beta()) > 0.02)
        throw MaterialError("orthotropic: nu_yx inconsistent with nu_xy*E_x/E_y");
}

inline void validate(const EtfeBilinear &m) {
    if (!(m.E > 0.0)) throw MaterialError("etfe: E must be positive");
    if (!(m.H > 0.0 && m.H < m.E)) throw MaterialError("etfe: H must satisfy 0 < H < E");
    if (!(m.sigma_Y > 0.0)) throw MaterialError("etfe: sigma_Y must be positive");
    if (!(m.nu > -1.0 && m.nu < 1.0)) throw MaterialError("etfe: nu must lie in (-1, 1)");
    if (!(m.G_e > 0.0)) throw MaterialError("etfe: G_e must be positive");
    const double g_iso = m.E / (2.0 * (1.0 + m.nu));
    if (std::abs(m.G_e - g_iso) / m.G_e > 0.02)
        throw MaterialError("etfe: G_e inconsistent with E/(2(1+nu))");
    if (m.eps_Y_uni && std::abs(*m.eps_Y_uni - m.sigma_Y / m.E) > 0.02 * *m.eps_Y_uni)
        throw MaterialError("etfe: eps_Y_uni inconsistent with sigma_Y/E");
}

inline Mat3 constitutive_matrix(const OrthotropicElastic &m) {
    validate(m);
    const double beta = m.beta(), nu = m.nu_xy;
    const double den = 1.0 - beta * nu * nu;
    Mat3 D = Mat3::Zero();
    D(0, 0) = beta;
    D(0, 1) = D(1, 0) = beta * nu;
    D(1, 1) = 1.0;
    D *= m.E_y / den;
    D(2, 2) = m.G; // E_y/den * kappa*(1 - beta nu^2)
    return D;
}

/// Isotropic plane-stress matrix with the shear entry set to G_e.
inline Mat3 etfe_elastic_matrix(const EtfeBilinear &m) {
    validate(m);
    Mat3 D = Mat3::Zero();
    const double f = m.E / (1.0 - m.nu * m.nu);
    D(0, 0) = D(1, 1) = f;
    D(0, 1) = D(1, 0) = f * m.nu;
    D(2, 2) = m.G_e;
    return D;
}

/// von Mises measure of a plane stress state.
inline double equivalent_stress(const Voigt &s) {
    return std::sqrt(std::max(0.0, s[0] * s[0] - s[0] * s[1] + s[1] * s[1] + 3.0 * s[2] * s[2]));
}

struct EtfeStress {
    Voigt sigma = Voigt::Zero();
    bool yielded = false;
};

namespace detail {

// sigma_eq^2 = s^T P s
inline Mat3 von_mises_form() {
    Mat3 P;
    P << 1.0, -0.5, 0.0, -0.5, 1.0, 0.0, 0.0, 0.0, 3.0;
    return P;
}

inline EtfeStress etfe_stress(const Voigt &eps, const Mat3 &D1, const EtfeBilinear &m) {
    const Voigt trial = D1 * eps;
    const double eq = equivalent_stress(trial);
    if (eq <= m.sigma_Y) return {trial, false};
    const double eta = m.hardening_ratio();
    const Voigt eps_y = (m.sigma_Y / eq) * eps;
    return {(1.0 - eta) * (D1 * eps_y) + eta * trial, true};
}

inline double etfe_energy_density(const Voigt &eps, const Mat3 &D1, const EtfeBilinear &m) {
    const Voigt trial = D1 * eps;
    const double eq = equivalent_stress(trial);
    if (eq <= m.sigma_Y) return 0.5 * eps.dot(trial);
    const double eta = m.hardening_ratio();
    const Voigt eps_y = (m.sigma_Y / eq) * eps;
    const Voigt sig_y = D1 * eps_y;
    const Voigt sig = (1.0 - eta) * sig_y + eta * trial;
    return 0.5 * (eps_y.dot(sig_y) + (eps - eps_y).dot(sig + sig_y));
}

// Exact derivative of etfe_energy_density. With s = sigma_Y/eq and
// q = eps^T D1 eps the yielded energy is q/2 (eta + (1-eta)(2s - s^2)).
inline Voigt etfe_energy_gradient(const Voigt &eps, const Mat3 &D1, const EtfeBilinear &m) {
    const Voigt trial = D1 * eps;
    const double eq = equivalent_stress(trial);
    if (eq <= m.sigma_Y) return trial;
    const double eta = m.hardening_ratio();
    const double s = m.sigma_Y / eq;
    const double q = eps.dot(trial);
    const Voigt m_eps = D1 * (von_mises_form() * trial);
    return (eta + (1.0 - eta) * (2.0 * s - s * s)) * trial -
           (q * (1.0 - eta) * (1.0 - s) * s / (eq * eq)) * m_eps;
}

// Inverse of the radial bilinear law: the strain whose stress is `sigma`.
inline Voigt etfe_strain_for_stress(const Voigt &sigma, const Mat3 &D1, const EtfeBilinear &m) {
    const Voigt elastic = D1.ldlt().solve(sigma);
    const double eq = equivalent_stress(sigma);
    if (eq <= m.sigma_Y) return elastic;
    const double ry = m.sigma_Y / eq;
    return ry * elastic + (1.0 - ry) / m.hardening_ratio() * elastic;
}

} // namespace detail

/// Trial stress D1 eps, scaled back along the radial path once the von Mises
/// measure of the trial stress exceeds sigma_Y.
inline EtfeStress etfe_stress(const Voigt &eps, const EtfeBilinear &m) {
    return detail::etfe_stress(eps, etfe_elastic_matrix(m), m);
}

/// Energy per unit area along the radial bilinear path: elastic triangle up
/// to the yield point plus the trapezoid beyond it.
inline double etfe_energy_density(const Voigt &eps, const EtfeBilinear &m) {
    return detail::etfe_energy_density(eps, etfe_elastic_matrix(m), m);
}

inline Voigt etfe_energy_gradient(const Voigt &eps, const EtfeBilinear &m) {
    return detail::etfe_energy_gradient(eps, etfe_elastic_matrix(m), m);
}

/// A validated material with its elastic matrix precomputed. All strains and
/// stresses passed here are in the material principal axes.
class MaterialModel {
public:
    using Variant = std::variant<OrthotropicElastic, EtfeBilinear>;

    MaterialModel(const OrthotropicElastic &m) : params_(m), D_(constitutive_matrix(m)) {}
    MaterialModel(const EtfeBilinear &m) : params_(m), D_(etfe_elastic_matrix(m)) {}

    const Variant &params() const noexcept { return params_; }
    const Mat3 &elastic_matrix() const noexcept { return D_; }
    bool is_etfe() const noexcept { return std::holds_alternative<EtfeBilinear>(params_); }
    std::string name() const { return is_etfe() ? "etfe" : "orthotropic"; }

    /// Mean of the two normal stiffness entries; used for tolerance scaling.
    double reference_stiffness() const { return 0.5 * (D_(0, 0) + D_(1, 1)); }

    double energy_density(const Voigt &eps) const {
        if (auto *e = std::get_if<EtfeBilinear>(&params_))
            return detail::etfe_energy_density(eps, D_, *e);
        return 0.5 * eps.dot(D_ * eps);
    }

    /// Derivative of energy_density with respect to the strain.
    Voigt energy_gradient(const Voigt &eps) const {
        if (auto *e = std::get_if<EtfeBilinear>(&params_))
            return detail::etfe_energy_gradient(eps, D_, *e);
        return D_ * eps;
    }

    Voigt stress(const Voigt &eps) const {
        if (auto *e = std::get_if<EtfeBilinear>(&params_))
            return detail::etfe_stress(eps, D_, *e).sigma;
        return D_ * eps;
    }

    Voigt strain_for_stress(const Voigt &sigma) const {
        if (auto *e = std::get_if<EtfeBilinear>(&params_))
            return detail::etfe_strain_for_stress(sigma, D_, *e);
        return D_.ldlt().solve(sigma);
    }

private:
    Variant params_;
    Mat3 D_;
};

} // namespace membrane
