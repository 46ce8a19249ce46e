#pragma once

#include "membrane/common.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace membrane {

/// Three node ids in local order 1, 2, 3 plus the angle (rad) from the
/// element x-axis (node 1 -> node 2) to the material principal axis.
struct Triangle {
    std::array<Index, 3> nodes{};
    double material_angle = 0.0;
};

struct Bounds3 {
    std::vector<Vec3> lower;
    std::vector<Vec3> upper;
};

struct Bounds2 {
    std::vector<Vec2> lower;
    std::vector<Vec2> upper;
};

/// Triangulated membrane surface in 3D.
///
/// `fixed[i][j]` pins coordinate j of node i. `element_sheet[k]` is the cutting
/// sheet that element k belongs to; sheet ids run 0..sheet_count()-1.
struct SurfaceMesh {
    std::vector<Vec3> nodes;
    std::vector<Triangle> elements;
    std::vector<std::array<bool, 3>> fixed;
    std::vector<int> element_sheet;
    std::optional<Bounds3> bounds;

    Index node_count() const noexcept { return static_cast<Index>(nodes.size()); }
    Index element_count() const noexcept { return static_cast<Index>(elements.size()); }

    int sheet_count() const {
        int n = 0;
        for (int s : element_sheet) n = std::max(n, s + 1);
        return n;
    }

    std::vector<Index> sheet_elements(int sheet) const {
        std::vector<Index> out;
        for (Index k = 0; k < element_count(); ++k)
            if (element_sheet[k] == sheet) out.push_back(k);
        return out;
    }

    std::array<Vec3, 3> corners(Index k) const {
        const auto &n = elements[k].nodes;
        return {nodes[n[0]], nodes[n[1]], nodes[n[2]]};
    }

    bool is_fully_fixed(Index node) const {
        const auto &f = fixed[node];
        return f[0] && f[1] && f[2];
    }
};

/// Planar cutting sheet. Node and element ids are local to the sheet;
/// `surface_node` / `surface_element` map them back onto the SurfaceMesh.
struct PatternSheet {
    int sheet = 0;
    std::vector<Vec2> nodes;
    std::vector<Triangle> elements;
    std::vector<Index> surface_node;
    std::vector<Index> surface_element;
    std::optional<Bounds2> bounds;

    Index node_count() const noexcept { return static_cast<Index>(nodes.size()); }
    Index element_count() const noexcept { return static_cast<Index>(elements.size()); }

    std::array<Vec2, 3> corners(Index k) const {
        const auto &n = elements[k].nodes;
        return {nodes[n[0]], nodes[n[1]], nodes[n[2]]};
    }
};

// ---------------------------------------------------------------------------
// Triangle geometry
// ---------------------------------------------------------------------------

inline Vec3 triangle_area_vector(const Vec3 &p1, const Vec3 &p2, const Vec3 &p3) {
    return 0.5 * (p2 - p1).cross(p3 - p1);
}

inline double triangle_area(const Vec3 &p1, const Vec3 &p2, const Vec3 &p3) {
    return triangle_area_vector(p1, p2, p3).norm();
}

inline double signed_area(const Vec2 &p1, const Vec2 &p2, const Vec2 &p3) {
    const Vec2 e1 = p2 - p1, e2 = p3 - p1;
    return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

inline double element_area(const SurfaceMesh &mesh, Index k) {
    const auto [p1, p2, p3] = mesh.corners(k);
    return triangle_area(p1, p2, p3);
}

/// Unit normal oriented by the element winding.
inline Vec3 element_normal(const SurfaceMesh &mesh, Index k) {
    const auto [p1, p2, p3] = mesh.corners(k);
    const Vec3 av = triangle_area_vector(p1, p2, p3);
    const double a = av.norm();
    if (!(a > kDegenerateArea)) throw DegenerateElement(k, "degenerate triangle has no normal");
    return av / a;
}

inline Vec3 element_centroid(const SurfaceMesh &mesh, Index k) {
    const auto [p1, p2, p3] = mesh.corners(k);
    return (p1 + p2 + p3) / 3.0;
}

inline double signed_area(const PatternSheet &sheet, Index k) {
    const auto [p1, p2, p3] = sheet.corners(k);
    return signed_area(p1, p2, p3);
}

inline double total_area(const SurfaceMesh &mesh) {
    double s = 0.0;
    for (Index k = 0; k < mesh.element_count(); ++k) s += element_area(mesh, k);
    return s;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace detail {

inline void check_connectivity(const std::vector<Triangle> &elements, Index node_count,
                               const char *what) {
    if (elements.empty()) throw ValidationError(std::string(what) + ": empty element list");
    for (std::size_t k = 0; k < elements.size(); ++k) {
        const auto &n = elements[k].nodes;
        for (Index id : n)
            if (id < 0 || id >= node_count)
                throw ValidationError(std::string(what) + ": element " + std::to_string(k) +
                                      " references missing node " + std::to_string(id));
        if (n[0] == n[1] || n[1] == n[2] || n[0] == n[2])
            throw ValidationError(std::string(what) + ": element " + std::to_string(k) +
                                  " has duplicate node ids");
        const double t = elements[k].material_angle;
        if (!(std::abs(t) <= std::numbers::pi))
            throw ValidationError(std::string(what) + ": element " + std::to_string(k) +
                                  " material angle outside [-pi, pi]");
    }
}

/// Fails when a directed edge appears twice among `ids`, i.e. two
/// neighbouring triangles disagree on orientation.
inline void check_winding(const std::vector<Triangle> &elements, const std::vector<Index> &ids,
                          const std::string &what) {
    std::map<std::pair<Index, Index>, Index> directed;
    for (Index k : ids) {
        const auto &n = elements[k].nodes;
        for (int e = 0; e < 3; ++e) {
            const auto key = std::make_pair(n[e], n[(e + 1) % 3]);
            auto [it, inserted] = directed.emplace(key, k);
            if (!inserted)
                throw ValidationError(what + ": inconsistent winding between elements " +
                                      std::to_string(it->second) + " and " + std::to_string(k));
        }
    }
}

} // namespace detail

inline void validate(const SurfaceMesh &mesh) {
    if (mesh.nodes.empty()) throw ValidationError("surface mesh: no nodes");
    detail::check_connectivity(mesh.elements, mesh.node_count(), "surface mesh");
    if (mesh.fixed.size() != mesh.nodes.size())
        throw ValidationError("surface mesh: fixed-flag count does not match node count");
    if (mesh.element_sheet.size() != mesh.elements.size())
        throw ValidationError("surface mesh: sheet assignment does not cover every element");
    for (const auto &p : mesh.nodes)
        if (!p.allFinite()) throw ValidationError("surface mesh: non-finite coordinate");
    for (Index k = 0; k < mesh.element_count(); ++k) {
        if (mesh.element_sheet[k] < 0)
            throw ValidationError("surface mesh: element " + std::to_string(k) +
                                  " has negative sheet id");
        if (!(element_area(mesh, k) > kDegenerateArea))
            throw DegenerateElement(k, "area below degeneracy threshold");
    }
    const int sheets = mesh.sheet_count();
    for (int s = 0; s < sheets; ++s) {
        const auto ids = mesh.sheet_elements(s);
        if (ids.empty())
            throw ValidationError("surface mesh: sheet " + std::to_string(s) + " is empty");
        detail::check_winding(mesh.elements, ids, "surface sheet " + std::to_string(s));
    }
    if (mesh.bounds) {
        const auto &b = *mesh.bounds;
        if (b.lower.size() != mesh.nodes.size() || b.upper.size() != mesh.nodes.size())
            throw ValidationError("surface mesh: bounds do not cover every node");
        for (Index i = 0; i < mesh.node_count(); ++i)
            if ((b.lower[i].array() > b.upper[i].array()).any())
                throw ValidationError("surface mesh: lower bound above upper bound at node " +
                                      std::to_string(i));
    }
}

inline void validate(const PatternSheet &sheet) {
    detail::check_connectivity(sheet.elements, sheet.node_count(), "pattern sheet");
    if (sheet.surface_node.size() != sheet.nodes.size() ||
        sheet.surface_element.size() != sheet.elements.size())
        throw ValidationError("pattern sheet: surface mapping size mismatch");
    for (Index k = 0; k < sheet.element_count(); ++k)
        if (!(signed_area(sheet, k) > kDegenerateArea))
            throw PatternError(k, "reversed or collapsed triangle");
}

/// Checks that `sheet` has the same triangles as sheet `sheet.sheet` of `mesh`.
inline void validate_against(const PatternSheet &sheet, const SurfaceMesh &mesh) {
    const auto ids = mesh.sheet_elements(sheet.sheet);
    if (ids.size() != sheet.elements.size())
        throw ValidationError("pattern sheet " + std::to_string(sheet.sheet) +
                              ": element count differs from surface sheet");
    for (Index k = 0; k < sheet.element_count(); ++k) {
        const Index sk = sheet.surface_element[k];
        if (sk < 0 || sk >= mesh.element_count() || mesh.element_sheet[sk] != sheet.sheet)
            throw ValidationError("pattern sheet: element " + std::to_string(k) +
                                  " maps outside its surface sheet");
        for (int a = 0; a < 3; ++a)
            if (sheet.surface_node[sheet.elements[k].nodes[a]] != mesh.elements[sk].nodes[a])
                throw ValidationError("pattern sheet: element " + std::to_string(k) +
                                      " connectivity differs from the surface");
    }
}

/// Local connectivity of one sheet: unique surface nodes in ascending order
/// and the sheet's triangles renumbered onto them.
struct SheetTopology {
    std::vector<Index> surface_node;
    std::vector<Index> surface_element;
    std::vector<Triangle> elements;
};

inline SheetTopology sheet_topology(const SurfaceMesh &mesh, int sheet) {
    SheetTopology t;
    t.surface_element = mesh.sheet_elements(sheet);
    std::vector<Index> local(mesh.nodes.size(), -1);
    for (Index k : t.surface_element)
        for (Index n : mesh.elements[k].nodes) local[n] = 0;
    for (Index n = 0; n < mesh.node_count(); ++n)
        if (local[n] == 0) {
            local[n] = static_cast<Index>(t.surface_node.size());
            t.surface_node.push_back(n);
        }
    for (Index k : t.surface_element) {
        Triangle tri = mesh.elements[k];
        for (auto &n : tri.nodes) n = local[n];
        t.elements.push_back(tri);
    }
    return t;
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

namespace detail {

/// (d+1)^2 grid over the unit square, two triangles per cell with the
/// diagonal alternating in a checkerboard so that cells (i, i) are split
/// along the main diagonal. Triangles are counter-clockwise in (xi, eta).
inline std::vector<Triangle> grid_triangles(int d) {
    std::vector<Triangle> tris;
    tris.reserve(2 * static_cast<std::size_t>(d) * d);
    auto id = [d](int i, int j) { return static_cast<Index>(j) * (d + 1) + i; };
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) {
            const Index n00 = id(i, j), n10 = id(i + 1, j), n01 = id(i, j + 1),
                        n11 = id(i + 1, j + 1);
            if ((i + j) % 2 == 0) {
                tris.push_back({{n00, n10, n11}, 0.0});
                tris.push_back({{n00, n11, n01}, 0.0});
            } else {
                tris.push_back({{n00, n10, n01}, 0.0});
                tris.push_back({{n10, n11, n01}, 0.0});
            }
        }
    return tris;
}

inline bool on_grid_boundary(int i, int j, int d) { return i == 0 || j == 0 || i == d || j == d; }

/// Sheet 0 below the grid diagonal from node (0,0) to (d,d), sheet 1 above.
inline std::vector<int> diagonal_sheets(const std::vector<Triangle> &elements, int d) {
    std::vector<int> sheet;
    for (const auto &t : elements) {
        double xi = 0.0, eta = 0.0;
        for (Index n : t.nodes) {
            xi += double(n % (d + 1));
            eta += double(n / (d + 1));
        }
        sheet.push_back(xi > eta ? 0 : 1);
    }
    return sheet;
}

} // namespace detail

/// HP-type saddle spanned by a warped rectangular frame of plan 1.0W x 1.3W.
/// Corners (0,0) and (W1,W2) sit at z = 0, the other two at z = 0.2W; the
/// surface is the bilinear interpolant. Boundary nodes are fixed. Sheet 0
/// holds the elements below the plan diagonal from (0,0) to (W1,W2), sheet 1
/// the rest; seam nodes are shared.
inline SurfaceMesh generate_hp_mesh(double width, int divisions) {
    if (divisions < 2) throw InvalidArgument("generate_hp_mesh: divisions must be >= 2");
    if (!(width > 0.0)) throw InvalidArgument("generate_hp_mesh: width must be positive");
    const int d = divisions;
    const double w1 = 1.0 * width, w2 = 1.3 * width, rise = 0.2 * width;

    SurfaceMesh m;
    for (int j = 0; j <= d; ++j)
        for (int i = 0; i <= d; ++i) {
            const double xi = double(i) / d, eta = double(j) / d;
            m.nodes.emplace_back(xi * w1, eta * w2, rise * (xi + eta - 2.0 * xi * eta));
            const bool b = detail::on_grid_boundary(i, j, d);
            m.fixed.push_back({b, b, b});
        }
    m.elements = detail::grid_triangles(d);
    m.element_sheet = detail::diagonal_sheets(m.elements, d);
    validate(m);
    return m;
}

/// Square cushion of plan W x W with the boundary fixed at z = 0 and interior
/// nodes on the biparabolic cap z = lift (1 - u^2)(1 - v^2), u, v in [-1, 1].
/// One sheet by default; with sheets = 2 the plan diagonal from (0,0) to
/// (W,W) splits it as in generate_hp_mesh. Normals point up (+z), i.e. out
/// of the enclosed air.
inline SurfaceMesh generate_square_cushion_mesh(double width, double lift, int divisions,
                                                int sheets = 1) {
    if (divisions < 2)
        throw InvalidArgument("generate_square_cushion_mesh: divisions must be >= 2");
    if (!(width > 0.0)) throw InvalidArgument("generate_square_cushion_mesh: width must be positive");
    if (!(lift >= 0.0)) throw InvalidArgument("generate_square_cushion_mesh: lift must be >= 0");
    if (sheets != 1 && sheets != 2)
        throw InvalidArgument("generate_square_cushion_mesh: sheets must be 1 or 2");
    const int d = divisions;

    SurfaceMesh m;
    for (int j = 0; j <= d; ++j)
        for (int i = 0; i <= d; ++i) {
            const double u = 2.0 * i / d - 1.0, v = 2.0 * j / d - 1.0;
            const bool b = detail::on_grid_boundary(i, j, d);
            const double z = b ? 0.0 : lift * (1.0 - u * u) * (1.0 - v * v);
            m.nodes.emplace_back(double(i) / d * width, double(j) / d * width, z);
            m.fixed.push_back({b, b, b});
        }
    m.elements = detail::grid_triangles(d);
    if (sheets == 2)
        m.element_sheet = detail::diagonal_sheets(m.elements, d);
    else
        m.element_sheet.assign(m.elements.size(), 0);
    validate(m);
    return m;
}

inline std::vector<Index> boundary_nodes(const SurfaceMesh &mesh) {
    std::vector<Index> out;
    for (Index i = 0; i < mesh.node_count(); ++i)
        if (mesh.is_fully_fixed(i)) out.push_back(i);
    return out;
}

} // namespace membrane
