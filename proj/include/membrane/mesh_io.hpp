#pragma once

// Text persistence for surface meshes and planar pattern sheets. The grammar
// is in docs/FORMATS.md. Coordinates are written in shortest round-trip form,
// so load(save(m)) reproduces every double exactly.

#include "membrane/common.hpp"
#include "membrane/mesh.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace membrane {

/// Writes `content` to a sibling temporary file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path &path, const std::string &content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            std::filesystem::remove(tmp);
            throw Error("write to " + tmp.string() + " failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

inline std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

namespace detail {

/// Whitespace-separated records; blank lines and '#' comments are skipped.
class RecordReader {
public:
    explicit RecordReader(const std::string &text) {
        std::istringstream in(text);
        std::string line;
        std::size_t no = 0;
        while (std::getline(in, line)) {
            ++no;
            if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
            std::vector<std::string> tok;
            std::istringstream ls(line);
            for (std::string t; ls >> t;) tok.push_back(t);
            if (!tok.empty()) records_.push_back({no, std::move(tok)});
        }
    }

    struct Record {
        std::size_t line;
        std::vector<std::string> tokens;
    };

    bool done() const { return pos_ >= records_.size(); }
    std::size_t last_line() const { return records_.empty() ? 0 : records_.back().line; }

    const Record &next(const std::string &expected) {
        if (done()) throw ParseError(last_line() + 1, expected, "unexpected end of file");
        return records_[pos_++];
    }

    /// Next record, checked to have `n` tokens whose first is `keyword`.
    const Record &keyword(const std::string &keyword, std::size_t n) {
        const Record &r = next(keyword);
        if (r.tokens[0] != keyword)
            throw ParseError(r.line, keyword, "expected '" + keyword + "', found '" + r.tokens[0] + "'");
        if (r.tokens.size() != n)
            throw ParseError(r.line, keyword, "expected " + std::to_string(n - 1) + " value(s)");
        return r;
    }

private:
    std::vector<Record> records_;
    std::size_t pos_ = 0;
};

inline void expect_fields(const RecordReader::Record &r, std::size_t n, const char *what) {
    if (r.tokens.size() != n)
        throw ParseError(r.line, what,
                         "expected " + std::to_string(n) + " fields, found " +
                             std::to_string(r.tokens.size()));
}

inline double parse_double(const RecordReader::Record &r, std::size_t i, const char *field) {
    const std::string &s = r.tokens[i];
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError(r.line, field, "'" + s + "' is not a number");
    if (!std::isfinite(v)) throw ParseError(r.line, field, "value is not finite");
    return v;
}

inline long long parse_int(const RecordReader::Record &r, std::size_t i, const char *field) {
    const std::string &s = r.tokens[i];
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError(r.line, field, "'" + s + "' is not an integer");
    return v;
}

inline long long parse_count(const RecordReader::Record &r, const char *field) {
    const long long n = parse_int(r, 1, field);
    if (n < 0) throw ParseError(r.line, field, "count must be non-negative");
    return n;
}

inline void read_header(RecordReader &in, const char *magic) {
    const auto &h = in.keyword(magic, 2);
    if (h.tokens[1] != "1") throw ParseError(h.line, "version", "unsupported version " + h.tokens[1]);
    const auto &u = in.keyword("units", 3);
    if (u.tokens[1] != "m") throw ParseError(u.line, "units.length", "length unit must be m");
    if (u.tokens[2] != "kN") throw ParseError(u.line, "units.force", "force unit must be kN");
}

inline std::array<bool, 3> parse_fixed(const RecordReader::Record &r, std::size_t i) {
    const std::string &s = r.tokens[i];
    if (s.size() != 3) throw ParseError(r.line, "fixed", "expected three 0/1 flags, e.g. 101");
    std::array<bool, 3> f{};
    for (int j = 0; j < 3; ++j) {
        if (s[j] != '0' && s[j] != '1')
            throw ParseError(r.line, "fixed", "flags must be 0 or 1");
        f[j] = s[j] == '1';
    }
    return f;
}

/// Element record shared by both formats; node ids are resolved through `ids`.
inline Triangle parse_element(const RecordReader::Record &r,
                              const std::unordered_map<long long, Index> &ids, int &sheet) {
    static const char *names[3] = {"n1", "n2", "n3"};
    Triangle t;
    for (int a = 0; a < 3; ++a) {
        const long long id = parse_int(r, 1 + a, names[a]);
        const auto it = ids.find(id);
        if (it == ids.end())
            throw ParseError(r.line, names[a], "unknown node id " + std::to_string(id));
        t.nodes[a] = it->second;
    }
    const long long s = parse_int(r, 4, "sheet");
    if (s < 0) throw ParseError(r.line, "sheet", "sheet id must be non-negative");
    sheet = static_cast<int>(s);
    t.material_angle = parse_double(r, 5, "material_angle");
    return t;
}

inline void write_element(std::string &out, long long id, const std::array<long long, 3> &n,
                          int sheet, double angle) {
    out += std::to_string(id);
    for (long long v : n) out += ' ' + std::to_string(v);
    out += ' ' + std::to_string(sheet) + ' ' + format_double(angle) + '\n';
}

} // namespace detail

// ---------------------------------------------------------------------------
// Surface mesh
// ---------------------------------------------------------------------------

inline std::string format_mesh(const SurfaceMesh &mesh) {
    std::string out = "membrane-mesh 1\nunits m kN\n";
    out += "nodes " + std::to_string(mesh.node_count()) + '\n';
    for (Index i = 0; i < mesh.node_count(); ++i) {
        const auto &p = mesh.nodes[i];
        out += std::to_string(i) + ' ' + format_double(p.x()) + ' ' + format_double(p.y()) + ' ' +
               format_double(p.z()) + ' ';
        for (bool f : mesh.fixed[i]) out += f ? '1' : '0';
        out += '\n';
    }
    out += "elements " + std::to_string(mesh.element_count()) + '\n';
    for (Index k = 0; k < mesh.element_count(); ++k) {
        const auto &n = mesh.elements[k].nodes;
        detail::write_element(out, k, {n[0], n[1], n[2]}, mesh.element_sheet[k],
                              mesh.elements[k].material_angle);
    }
    return out;
}

/// Parses and validates a mesh. Node ids may be any distinct integers;
/// nodes are stored in file order.
inline SurfaceMesh parse_mesh(const std::string &text) {
    detail::RecordReader in(text);
    detail::read_header(in, "membrane-mesh");

    SurfaceMesh m;
    std::unordered_map<long long, Index> ids;
    const long long nn = detail::parse_count(in.keyword("nodes", 2), "nodes");
    for (long long i = 0; i < nn; ++i) {
        const auto &r = in.next("node");
        detail::expect_fields(r, 5, "node");
        const long long id = detail::parse_int(r, 0, "id");
        if (!ids.emplace(id, static_cast<Index>(i)).second)
            throw ParseError(r.line, "id", "duplicate node id " + std::to_string(id));
        m.nodes.emplace_back(detail::parse_double(r, 1, "x"), detail::parse_double(r, 2, "y"),
                             detail::parse_double(r, 3, "z"));
        m.fixed.push_back(detail::parse_fixed(r, 4));
    }

    const long long ne = detail::parse_count(in.keyword("elements", 2), "elements");
    std::unordered_map<long long, Index> element_ids;
    for (long long k = 0; k < ne; ++k) {
        const auto &r = in.next("element");
        detail::expect_fields(r, 6, "element");
        const long long id = detail::parse_int(r, 0, "id");
        if (!element_ids.emplace(id, static_cast<Index>(k)).second)
            throw ParseError(r.line, "id", "duplicate element id " + std::to_string(id));
        int sheet = 0;
        m.elements.push_back(detail::parse_element(r, ids, sheet));
        m.element_sheet.push_back(sheet);
    }
    if (!in.done()) {
        const auto &r = in.next("end");
        throw ParseError(r.line, r.tokens[0], "unexpected trailing record");
    }
    validate(m);
    return m;
}

inline void save_mesh(const SurfaceMesh &mesh, const std::filesystem::path &path) {
    validate(mesh);
    write_file_atomic(path, format_mesh(mesh));
}

inline SurfaceMesh load_mesh(const std::filesystem::path &path) { return parse_mesh(read_file(path)); }

// ---------------------------------------------------------------------------
// Pattern sheet
// ---------------------------------------------------------------------------

/// Node and element ids in a pattern file are the surface ids, so a pattern
/// can be matched to its mesh.
inline std::string format_pattern(const PatternSheet &sheet) {
    std::string out = "membrane-pattern 1\nunits m kN\n";
    out += "sheet " + std::to_string(sheet.sheet) + '\n';
    out += "nodes " + std::to_string(sheet.node_count()) + '\n';
    for (Index i = 0; i < sheet.node_count(); ++i)
        out += std::to_string(sheet.surface_node[i]) + ' ' + format_double(sheet.nodes[i].x()) +
               ' ' + format_double(sheet.nodes[i].y()) + '\n';
    out += "elements " + std::to_string(sheet.element_count()) + '\n';
    for (Index k = 0; k < sheet.element_count(); ++k) {
        const auto &n = sheet.elements[k].nodes;
        detail::write_element(out, sheet.surface_element[k],
                              {sheet.surface_node[n[0]], sheet.surface_node[n[1]],
                               sheet.surface_node[n[2]]},
                              sheet.sheet, sheet.elements[k].material_angle);
    }
    return out;
}

inline PatternSheet parse_pattern(const std::string &text) {
    detail::RecordReader in(text);
    detail::read_header(in, "membrane-pattern");

    PatternSheet ps;
    const auto &sr = in.keyword("sheet", 2);
    const long long s = detail::parse_int(sr, 1, "sheet");
    if (s < 0) throw ParseError(sr.line, "sheet", "sheet id must be non-negative");
    ps.sheet = static_cast<int>(s);

    std::unordered_map<long long, Index> ids;
    const long long nn = detail::parse_count(in.keyword("nodes", 2), "nodes");
    for (long long i = 0; i < nn; ++i) {
        const auto &r = in.next("node");
        detail::expect_fields(r, 3, "node");
        const long long id = detail::parse_int(r, 0, "id");
        if (id < 0) throw ParseError(r.line, "id", "surface node id must be non-negative");
        if (!ids.emplace(id, static_cast<Index>(i)).second)
            throw ParseError(r.line, "id", "duplicate node id " + std::to_string(id));
        ps.nodes.emplace_back(detail::parse_double(r, 1, "x"), detail::parse_double(r, 2, "y"));
        ps.surface_node.push_back(static_cast<Index>(id));
    }

    const long long ne = detail::parse_count(in.keyword("elements", 2), "elements");
    for (long long k = 0; k < ne; ++k) {
        const auto &r = in.next("element");
        detail::expect_fields(r, 6, "element");
        const long long id = detail::parse_int(r, 0, "id");
        if (id < 0) throw ParseError(r.line, "id", "surface element id must be non-negative");
        int sheet = 0;
        ps.elements.push_back(detail::parse_element(r, ids, sheet));
        if (sheet != ps.sheet)
            throw ParseError(r.line, "sheet", "element belongs to sheet " + std::to_string(sheet) +
                                                  ", file declares sheet " +
                                                  std::to_string(ps.sheet));
        ps.surface_element.push_back(static_cast<Index>(id));
    }
    if (!in.done()) {
        const auto &r = in.next("end");
        throw ParseError(r.line, r.tokens[0], "unexpected trailing record");
    }
    validate(ps);
    return ps;
}

inline void save_pattern(const PatternSheet &sheet, const std::filesystem::path &path) {
    validate(sheet);
    write_file_atomic(path, format_pattern(sheet));
}

inline PatternSheet load_pattern(const std::filesystem::path &path) {
    return parse_pattern(read_file(path));
}

} // namespace membrane
