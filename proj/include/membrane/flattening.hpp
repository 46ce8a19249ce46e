#pragma once

// From a curved surface sheet to a planar cutting sheet: projection for the
// initial guess, strain removal for the unstressed edge lengths, and the
// weighted least-squares fit of the planar edge lengths.

#include "membrane/common.hpp"
#include "membrane/fem.hpp"
#include "membrane/materials.hpp"
#include "membrane/mesh.hpp"
#include "membrane/optimizer.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace membrane {

// ---------------------------------------------------------------------------
// Projection
// ---------------------------------------------------------------------------

struct Sphere {
    Vec3 center = Vec3::Zero();
    double radius = 0.0;
};

/// Algebraic least-squares sphere: |x|^2 = 2 c.x + (r^2 - |c|^2).
inline Sphere fit_sphere(const std::vector<Vec3> &points) {
    if (points.size() < 4) throw InvalidArgument("fit_sphere: need at least 4 points");
    Eigen::MatrixXd A(points.size(), 4);
    Eigen::VectorXd rhs(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        A.row(i) << 2.0 * points[i].transpose(), 1.0;
        rhs[i] = points[i].squaredNorm();
    }
    const Eigen::Vector4d sol = A.colPivHouseholderQr().solve(rhs);
    Sphere s;
    s.center = sol.head<3>();
    const double r2 = sol[3] + s.center.squaredNorm();
    if (!(r2 > 0.0) || !s.center.allFinite())
        throw InvalidArgument("fit_sphere: points do not determine a sphere");
    s.radius = std::sqrt(r2);
    return s;
}

struct ProjectionMode {
    enum class Kind { parallel, toward_point };

    Kind kind = Kind::parallel;
    /// Target plane. For toward_point an unset origin places the plane
    /// through the sheet node farthest from the center along `normal`, and an
    /// unset normal points from the center to the sheet's mean node.
    Vec3 normal = Vec3::UnitZ();
    std::optional<Vec3> origin;
    bool normal_from_center = false;
    /// Projection center; unset selects the best-fit sphere center.
    std::optional<Vec3> center;

    static ProjectionMode parallel_to(const Vec3 &normal, const Vec3 &origin = Vec3::Zero()) {
        ProjectionMode m;
        m.normal = normal;
        m.origin = origin;
        return m;
    }

    static ProjectionMode toward(std::optional<Vec3> center = std::nullopt) {
        ProjectionMode m;
        m.kind = Kind::toward_point;
        m.center = center;
        m.normal_from_center = true;
        return m;
    }
};

/// In-plane basis: e1 is global X projected onto the plane (global Y when X
/// is nearly normal), e2 = n x e1.
inline std::pair<Vec3, Vec3> plane_frame(const Vec3 &normal) {
    const Vec3 n = normal.normalized();
    Vec3 e1 = Vec3::UnitX() - n.x() * n;
    if (e1.norm() < 1e-6) e1 = Vec3::UnitY() - n.y() * n;
    e1.normalize();
    return {e1, n.cross(e1)};
}

/// Material angle that aligns the material x-axis with the sheet X axis.
inline double sheet_aligned_angle(const Vec2 &p1, const Vec2 &p2) {
    const Vec2 d = p2 - p1;
    return -std::atan2(d.y(), d.x());
}

inline void align_material_with_sheet(PatternSheet &sheet) {
    for (Index k = 0; k < sheet.element_count(); ++k) {
        auto &t = sheet.elements[k];
        t.material_angle = sheet_aligned_angle(sheet.nodes[t.nodes[0]], sheet.nodes[t.nodes[1]]);
    }
}

inline void check_orientation(const PatternSheet &sheet, const char *stage) {
    for (Index k = 0; k < sheet.element_count(); ++k)
        if (!(signed_area(sheet, k) > kDegenerateArea))
            throw PatternError(sheet.surface_element.empty() ? k : sheet.surface_element[k],
                               std::string(stage) + ": reversed or collapsed triangle");
}

/// Initial planar sheet for sheet `sheet` of `mesh`. Material angles are set
/// so that the material x-axis runs along the sheet X axis.
inline PatternSheet project_to_plane(const SurfaceMesh &mesh, int sheet,
                                     const ProjectionMode &mode) {
    const SheetTopology topo = sheet_topology(mesh, sheet);
    if (topo.surface_element.empty())
        throw InvalidArgument("project_to_plane: sheet " + std::to_string(sheet) + " is empty");
    std::vector<Vec3> pts;
    for (Index n : topo.surface_node) pts.push_back(mesh.nodes[n]);

    PatternSheet out;
    out.sheet = sheet;
    out.surface_node = topo.surface_node;
    out.surface_element = topo.surface_element;
    out.elements = topo.elements;

    if (mode.kind == ProjectionMode::Kind::parallel) {
        if (!(mode.normal.norm() > 0.0)) throw InvalidArgument("projection normal is zero");
        const auto [e1, e2] = plane_frame(mode.normal);
        const Vec3 o = mode.origin.value_or(Vec3::Zero());
        for (const auto &p : pts) out.nodes.emplace_back((p - o).dot(e1), (p - o).dot(e2));
    } else {
        const Vec3 c = mode.center ? *mode.center : fit_sphere(pts).center;
        Vec3 n = mode.normal;
        if (mode.normal_from_center) {
            Vec3 mean = Vec3::Zero();
            for (const auto &p : pts) mean += p;
            n = mean / double(pts.size()) - c;
        }
        if (!(n.norm() > 0.0)) throw InvalidArgument("projection normal is zero");
        n.normalize();
        Vec3 o;
        if (mode.origin) {
            o = *mode.origin;
        } else {
            o = pts.front();
            for (const auto &p : pts)
                if ((p - c).dot(n) > (o - c).dot(n)) o = p;
        }
        const double depth = (o - c).dot(n);
        if (!(depth > 0.0)) throw InvalidArgument("projection plane must lie beyond the center");
        const auto [e1, e2] = plane_frame(n);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const Vec3 ray = pts[i] - c;
            const double along = ray.dot(n);
            if (!(along > 0.0))
                throw PatternError(-1, "node " + std::to_string(topo.surface_node[i]) +
                                           " lies behind the projection center");
            const Vec3 hit = c + (depth / along) * ray;
            out.nodes.emplace_back((hit - o).dot(e1), (hit - o).dot(e2));
        }
    }
    check_orientation(out, "projection");
    align_material_with_sheet(out);
    return out;
}

// ---------------------------------------------------------------------------
// Strain removal
// ---------------------------------------------------------------------------

/// Edge lengths per element; edge 0 joins nodes 1-2, edge 1 nodes 2-3, edge 2
/// nodes 3-1.
using EdgeLengths = std::array<double, 3>;
using UnstressedLengths = std::vector<EdgeLengths>;

inline EdgeLengths edge_lengths(const Vec3 &p1, const Vec3 &p2, const Vec3 &p3) {
    return {(p2 - p1).norm(), (p3 - p2).norm(), (p1 - p3).norm()};
}

inline EdgeLengths edge_lengths(const Vec2 &p1, const Vec2 &p2, const Vec2 &p3) {
    return {(p2 - p1).norm(), (p3 - p2).norm(), (p1 - p3).norm()};
}

inline void check_triangle_lengths(const EdgeLengths &L, Index element) {
    for (int i = 0; i < 3; ++i)
        if (!(L[i] > 0.0))
            throw DegenerateElement(element, "strain removal produced a non-positive edge length");
    if (!(L[0] < L[1] + L[2] && L[1] < L[2] + L[0] && L[2] < L[0] + L[1]))
        throw DegenerateElement(element, "strain removal violates the triangle inequality");
}

/// Unstressed lengths of one surface triangle after removing the stress
/// `sigma_hat` (material axes at `theta` from the element x-axis). First
/// order: L0 = L (1 - t^T E t) with E the local strain tensor.
inline EdgeLengths unstressed_edge_lengths(const Vec3 &p1, const Vec3 &p2, const Vec3 &p3,
                                           const MaterialModel &mat, const Voigt &sigma_hat,
                                           double theta, Index element = -1) {
    const ReferenceElement loc = local_coords(p1, p2, p3, element);
    const Voigt eps = rotate_strain(mat.strain_for_stress(sigma_hat), -theta);
    Eigen::Matrix2d E;
    E << eps[0], 0.5 * eps[2], 0.5 * eps[2], eps[1];
    const std::array<Eigen::Vector2d, 3> q{Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(loc.a, 0.0),
                                           Eigen::Vector2d(loc.b, loc.h)};
    EdgeLengths L0{};
    for (int i = 0; i < 3; ++i) {
        const Eigen::Vector2d d = q[(i + 1) % 3] - q[i];
        const double len = d.norm();
        const Eigen::Vector2d t = d / len;
        L0[i] = len * (1.0 - t.dot(E * t));
    }
    check_triangle_lengths(L0, element);
    return L0;
}

/// Reduction stresses (sigma_1, sigma_2) per element; shear is always zero.
using ReductionStressField = std::vector<Eigen::Vector2d>;

inline UnstressedLengths surface_unstressed_lengths(const SurfaceMesh &mesh,
                                                    const MaterialModel &mat,
                                                    const ReductionStressField &sigma_hat) {
    if (static_cast<Index>(sigma_hat.size()) != mesh.element_count())
        throw InvalidArgument("reduction stress field does not cover the mesh");
    UnstressedLengths out;
    out.reserve(mesh.elements.size());
    for (Index k = 0; k < mesh.element_count(); ++k) {
        const auto [p1, p2, p3] = mesh.corners(k);
        const Voigt s(sigma_hat[k][0], sigma_hat[k][1], 0.0);
        out.push_back(
            unstressed_edge_lengths(p1, p2, p3, mat, s, mesh.elements[k].material_angle, k));
    }
    return out;
}

/// Lengths for the elements of one pattern sheet, in sheet-local order.
inline UnstressedLengths sheet_lengths(const UnstressedLengths &surface, const PatternSheet &sheet) {
    UnstressedLengths out;
    for (Index k : sheet.surface_element) out.push_back(surface[k]);
    return out;
}

// ---------------------------------------------------------------------------
// Pattern fit
// ---------------------------------------------------------------------------

/// F = sum_k sum_i kappa_ki (L^P_ki - L0_ki)^2 with kappa_ki = 1 / L0_ki.
/// `grad` (optional) receives dF/dX^P in the [x0 y0 x1 ...] layout.
inline double pattern_objective(const std::vector<Vec2> &nodes,
                                const std::vector<Triangle> &elements,
                                const UnstressedLengths &L0, Eigen::VectorXd *grad = nullptr) {
    if (L0.size() != elements.size())
        throw InvalidArgument("unstressed lengths do not cover the pattern");
    if (grad) grad->setZero(2 * static_cast<Index>(nodes.size()));
    double F = 0.0;
    for (std::size_t k = 0; k < elements.size(); ++k) {
        const auto &n = elements[k].nodes;
        for (int i = 0; i < 3; ++i) {
            const Index a = n[i], b = n[(i + 1) % 3];
            const Vec2 d = nodes[b] - nodes[a];
            const double len = d.norm();
            const double kappa = 1.0 / L0[k][i];
            const double r = len - L0[k][i];
            F += kappa * r * r;
            if (grad && len > 0.0) {
                const Vec2 gd = (2.0 * kappa * r / len) * d;
                grad->segment<2>(2 * b) += gd;
                grad->segment<2>(2 * a) -= gd;
            }
        }
    }
    return F;
}

inline double pattern_weight_norm(const UnstressedLengths &L0) {
    double s = 0.0;
    for (const auto &l : L0)
        for (double x : l) s += x; // kappa * L0^2 = L0
    return s;
}

struct PatternQuality {
    double F = 0.0;
    double max_rel_edge_error = 0.0;
};

inline PatternQuality pattern_quality(const PatternSheet &sheet, const UnstressedLengths &L0) {
    PatternQuality q;
    q.F = pattern_objective(sheet.nodes, sheet.elements, L0);
    for (Index k = 0; k < sheet.element_count(); ++k) {
        const auto [p1, p2, p3] = sheet.corners(k);
        const EdgeLengths L = edge_lengths(p1, p2, p3);
        for (int i = 0; i < 3; ++i)
            q.max_rel_edge_error =
                std::max(q.max_rel_edge_error, std::abs(L[i] - L0[k][i]) / L0[k][i]);
    }
    return q;
}

struct FitConfig {
    SolverConfig solver{};
    /// Infinity norm on dF/dX^P (dimensionless).
    double grad_tol = 1e-8;
};

struct FitResult {
    PatternSheet sheet;
    double F = 0.0;
    SolverReport report;
};

namespace detail {

/// Proper rigid motion (R, t) minimizing sum |R x_i + t - y_i|^2.
inline std::pair<Eigen::Matrix2d, Vec2> rigid_align(const std::vector<Vec2> &x,
                                                    const std::vector<Vec2> &y) {
    Vec2 cx = Vec2::Zero(), cy = Vec2::Zero();
    for (std::size_t i = 0; i < x.size(); ++i) {
        cx += x[i];
        cy += y[i];
    }
    cx /= double(x.size());
    cy /= double(y.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const Vec2 a = x[i] - cx, b = y[i] - cy;
        sxx += a.x() * b.x() + a.y() * b.y();
        sxy += a.x() * b.y() - a.y() * b.x();
    }
    const double phi = std::atan2(sxy, sxx);
    Eigen::Matrix2d R;
    R << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
    return {R, cy - R * cx};
}

inline Index first_neighbor(const std::vector<Triangle> &elements, Index node) {
    Index best = -1;
    for (const auto &t : elements)
        for (int i = 0; i < 3; ++i)
            if (t.nodes[i] == node)
                for (int j = 1; j < 3; ++j) {
                    const Index o = t.nodes[(i + j) % 3];
                    if (best < 0 || o < best) best = o;
                }
    return best;
}

} // namespace detail

/// Solves the weighted edge-length fit from `initial`. The planar rigid
/// motion is removed by pinning node 0 and constraining its lowest-id
/// neighbour to the line through it; the result is then rigidly placed to
/// best match `initial`, which keeps the sheet axes (and hence the material
/// axes) where the initial guess had them.
inline FitResult fit_pattern(const PatternSheet &initial, const UnstressedLengths &L0,
                             const FitConfig &cfg = {}) {
    validate(initial);
    if (static_cast<Index>(L0.size()) != initial.element_count())
        throw InvalidArgument("fit_pattern: unstressed lengths do not cover the sheet");
    for (std::size_t k = 0; k < L0.size(); ++k) check_triangle_lengths(L0[k], Index(k));

    const Index n = initial.node_count();
    const Index anchor = 0;
    const Index neighbor = detail::first_neighbor(initial.elements, anchor);

    // Gauge frame: anchor at the origin, neighbour on +x.
    const Vec2 o = initial.nodes[anchor];
    const Vec2 dir = (initial.nodes[neighbor] - o).normalized();
    Eigen::Matrix2d Rg;
    Rg << dir.x(), dir.y(), -dir.y(), dir.x();
    std::vector<Vec2> work(n);
    for (Index i = 0; i < n; ++i) work[i] = Rg * (initial.nodes[i] - o);

    std::vector<Index> free;
    for (Index i = 0; i < n; ++i)
        for (int j = 0; j < 2; ++j) {
            if (i == anchor) continue;
            if (i == neighbor && j == 1) continue;
            free.push_back(2 * i + j);
        }

    std::optional<BoxBounds> box;
    if (initial.bounds) {
        // Bounds are stated in the sheet frame; keep that frame and pin the anchor only.
        for (Index i = 0; i < n; ++i) work[i] = initial.nodes[i];
        free.clear();
        for (Index i = 0; i < n; ++i)
            if (i != anchor) {
                free.push_back(2 * i);
                free.push_back(2 * i + 1);
            }
        box = BoxBounds{Eigen::VectorXd(free.size()), Eigen::VectorXd(free.size())};
        for (std::size_t k = 0; k < free.size(); ++k) {
            box->lower[k] = initial.bounds->lower[free[k] / 2][free[k] % 2];
            box->upper[k] = initial.bounds->upper[free[k] / 2][free[k] % 2];
        }
    }

    Eigen::VectorXd x(free.size());
    for (std::size_t k = 0; k < free.size(); ++k) x[k] = work[free[k] / 2][free[k] % 2];

    const auto &elements = initial.elements;
    Objective obj = [&work, &free, &elements, &L0](const Eigen::VectorXd &v,
                                                   Eigen::VectorXd &grad) {
        for (std::size_t k = 0; k < free.size(); ++k) work[free[k] / 2][free[k] % 2] = v[k];
        Eigen::VectorXd full;
        const double F = pattern_objective(work, elements, L0, &full);
        grad.resize(static_cast<Index>(free.size()));
        for (std::size_t k = 0; k < free.size(); ++k) grad[k] = full[free[k]];
        return F;
    };
    MinimizeResult res = minimize_lbfgs(obj, x, box, cfg.solver, cfg.grad_tol);
    for (std::size_t k = 0; k < free.size(); ++k) work[free[k] / 2][free[k] % 2] = res.x[k];

    FitResult out;
    out.sheet = initial;
    if (initial.bounds) {
        out.sheet.nodes = work;
    } else {
        const auto [R, t] = detail::rigid_align(work, initial.nodes);
        for (Index i = 0; i < n; ++i) out.sheet.nodes[i] = R * work[i] + t;
    }
    check_orientation(out.sheet, "pattern fit");
    align_material_with_sheet(out.sheet);
    out.F = pattern_objective(out.sheet.nodes, out.sheet.elements, L0);
    out.report = res.report;
    return out;
}

// ---------------------------------------------------------------------------
// Pattern -> surface reference geometry
// ---------------------------------------------------------------------------

/// Unstressed reference elements of the surface, one per surface element,
/// taken from the planar sheets.
inline std::vector<ReferenceElement> references_from_patterns(
    const SurfaceMesh &mesh, const std::vector<PatternSheet> &patterns) {
    std::vector<ReferenceElement> refs(mesh.elements.size());
    std::vector<bool> seen(mesh.elements.size(), false);
    for (const auto &ps : patterns)
        for (Index k = 0; k < ps.element_count(); ++k) {
            const auto [p1, p2, p3] = ps.corners(k);
            const Index sk = ps.surface_element[k];
            refs[sk] = local_coords(p1, p2, p3, sk);
            seen[sk] = true;
        }
    for (std::size_t k = 0; k < seen.size(); ++k)
        if (!seen[k])
            throw InvalidArgument("surface element " + std::to_string(k) + " has no pattern");
    return refs;
}

/// Copies the pattern material angles onto the surface elements.
inline void apply_material_angles(SurfaceMesh &mesh, const std::vector<PatternSheet> &patterns) {
    for (const auto &ps : patterns)
        for (Index k = 0; k < ps.element_count(); ++k)
            mesh.elements[ps.surface_element[k]].material_angle = ps.elements[k].material_angle;
}

} // namespace membrane
