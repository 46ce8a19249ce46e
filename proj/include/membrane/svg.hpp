#pragma once

// SVG plot of a cutting sheet: the initial projection stroked black under the
// optimized pattern stroked red.

#include "membrane/common.hpp"
#include "membrane/mesh.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace membrane {

namespace detail {

inline std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline void svg_edges(std::string &out, const PatternSheet &s, const char *colour) {
    out += "  <g stroke=\"";
    out += colour;
    out += "\" fill=\"none\">\n";
    for (Index k = 0; k < s.element_count(); ++k) {
        const auto [a, b, c] = s.corners(k);
        out += "    <polygon points=\"";
        for (const Vec2 *p : {&a, &b, &c}) out += svg_num(p->x()) + ',' + svg_num(-p->y()) + ' ';
        out.back() = '"';
        out += "/>\n";
    }
    out += "  </g>\n";
}

} // namespace detail

/// Either sheet may be empty (no elements). Y points up in the picture.
inline std::string pattern_overlay_svg(const PatternSheet &initial, const PatternSheet &optimized) {
    double x0 = std::numeric_limits<double>::max(), y0 = x0;
    double x1 = std::numeric_limits<double>::lowest(), y1 = x1;
    for (const auto *s : {&initial, &optimized})
        for (const auto &p : s->nodes) {
            x0 = std::min(x0, p.x());
            x1 = std::max(x1, p.x());
            y0 = std::min(y0, -p.y());
            y1 = std::max(y1, -p.y());
        }
    if (x0 > x1) x0 = x1 = y0 = y1 = 0.0;
    const double span = std::max({x1 - x0, y1 - y0, 1e-9});
    const double pad = 0.05 * span;
    const double w = x1 - x0 + 2 * pad, h = y1 - y0 + 2 * pad;

    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"" +
           detail::svg_num(800.0 * h / w) + "\" viewBox=\"" + detail::svg_num(x0 - pad) + ' ' +
           detail::svg_num(y0 - pad) + ' ' + detail::svg_num(w) + ' ' + detail::svg_num(h) +
           "\" stroke-width=\"" + detail::svg_num(0.002 * span) + "\">\n";
    out += "  <title>sheet " + std::to_string(optimized.sheet) +
           ": initial projection (black), optimized pattern (red)</title>\n";
    detail::svg_edges(out, initial, "black");
    detail::svg_edges(out, optimized, "red");
    out += "</svg>\n";
    return out;
}

} // namespace membrane
