#pragma once

// JSON run configuration for the command-line front end.

#include "membrane/common.hpp"
#include "membrane/flattening.hpp"
#include "membrane/materials.hpp"
#include "membrane/mesh.hpp"
#include "membrane/mesh_io.hpp"
#include "membrane/pattern_loop.hpp"
#include "membrane/pneumatics.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <variant>

namespace membrane {

/// Invalid configuration; `key()` is the dotted path of the offending entry.
class ConfigError : public ValidationError {
public:
    ConfigError(const std::string &key, const std::string &what)
        : ValidationError("config '" + key + "': " + what), key_(key) {}

    const std::string &key() const noexcept { return key_; }

private:
    std::string key_;
};

struct ModelSpec {
    enum class Kind { hp, cushion, file };
    Kind kind = Kind::hp;
    double width = 10.0;
    double lift = 0.58;
    int divisions = 11;
    int sheets = 1;
    std::filesystem::path mesh; // Kind::file
};

struct RunConfig {
    ModelSpec model;
    MaterialModel::Variant material;
    TargetStress target;
    std::optional<PressureLoad> pressure;
    ProjectionMode projection;
    LoopConfig loop;
    std::filesystem::path output = "out";
};

namespace detail {

using nlohmann::json;

/// A JSON object whose keys must all be read; leftovers are reported.
class Section {
public:
    Section(const json &j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
    }

    std::string key(const std::string &k) const { return path_.empty() ? k : path_ + "." + k; }
    bool has(const std::string &k) const { return j_.contains(k); }

    const json &raw(const std::string &k) {
        seen_.insert(k);
        return j_.at(k);
    }

    Section section(const std::string &k) {
        if (!has(k)) throw ConfigError(key(k), "missing section");
        return Section(raw(k), key(k));
    }

    double number(const std::string &k) {
        if (!has(k)) throw ConfigError(key(k), "missing value");
        const json &v = raw(k);
        if (!v.is_number()) throw ConfigError(key(k), "must be a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(key(k), "must be finite");
        return d;
    }
    double number(const std::string &k, double fallback) { return has(k) ? number(k) : fallback; }

    std::optional<double> optional_number(const std::string &k) {
        if (!has(k)) return std::nullopt;
        return number(k);
    }

    int integer(const std::string &k, int fallback) {
        if (!has(k)) return fallback;
        const json &v = raw(k);
        if (!v.is_number_integer()) throw ConfigError(key(k), "must be an integer");
        return v.get<int>();
    }

    bool boolean(const std::string &k, bool fallback) {
        if (!has(k)) return fallback;
        const json &v = raw(k);
        if (!v.is_boolean()) throw ConfigError(key(k), "must be true or false");
        return v.get<bool>();
    }

    std::string string(const std::string &k) {
        if (!has(k)) throw ConfigError(key(k), "missing value");
        const json &v = raw(k);
        if (!v.is_string()) throw ConfigError(key(k), "must be a string");
        return v.get<std::string>();
    }

    Vec3 vec3(const std::string &k) {
        const json &v = raw(k);
        if (!v.is_array() || v.size() != 3) throw ConfigError(key(k), "must be an array of 3 numbers");
        Vec3 out;
        for (int i = 0; i < 3; ++i) {
            if (!v[i].is_number()) throw ConfigError(key(k), "must be an array of 3 numbers");
            out[i] = v[i].get<double>();
        }
        if (!out.allFinite()) throw ConfigError(key(k), "must be finite");
        return out;
    }

    void finish() const {
        for (const auto &[k, v] : j_.items())
            if (!seen_.count(k)) throw ConfigError(key(k), "unknown key");
    }

private:
    const json &j_;
    std::string path_;
    std::set<std::string> seen_;
};

/// Runs a module validator and re-labels its failure with a config key.
template <class F>
void checked(const std::string &key, F &&f) {
    try {
        f();
    } catch (const ConfigError &) {
        throw;
    } catch (const Error &e) {
        throw ConfigError(key, e.what());
    }
}

inline ModelSpec parse_model(Section s, const std::filesystem::path &base) {
    ModelSpec m;
    if (s.has("mesh")) {
        if (s.has("builtin")) throw ConfigError(s.key("mesh"), "give either 'builtin' or 'mesh', not both");
        m.kind = ModelSpec::Kind::file;
        m.mesh = s.string("mesh");
        if (m.mesh.is_relative()) m.mesh = base / m.mesh;
        if (!std::filesystem::exists(m.mesh))
            throw ConfigError(s.key("mesh"), "file " + m.mesh.string() + " does not exist");
        s.finish();
        return m;
    }
    const std::string b = s.string("builtin");
    if (b == "hp")
        m.kind = ModelSpec::Kind::hp;
    else if (b == "cushion")
        m.kind = ModelSpec::Kind::cushion;
    else
        throw ConfigError(s.key("builtin"), "must be 'hp' or 'cushion'");
    m.width = s.number("width", m.width);
    m.divisions = s.integer("divisions", m.divisions);
    if (m.kind == ModelSpec::Kind::cushion) {
        m.lift = s.number("lift", m.lift);
        m.sheets = s.integer("sheets", m.sheets);
        if (m.sheets != 1 && m.sheets != 2) throw ConfigError(s.key("sheets"), "must be 1 or 2");
        if (!(m.lift >= 0.0)) throw ConfigError(s.key("lift"), "must be >= 0");
    }
    if (!(m.width > 0.0)) throw ConfigError(s.key("width"), "must be positive");
    if (m.divisions < 2) throw ConfigError(s.key("divisions"), "must be >= 2");
    s.finish();
    return m;
}

inline MaterialModel::Variant parse_material(Section s) {
    const std::string type = s.string("type");
    if (type == "orthotropic") {
        OrthotropicElastic m{s.number("E_x"), s.number("E_y"), s.number("G"), s.number("nu_xy"),
                             s.optional_number("nu_yx")};
        s.finish();
        checked(s.key("type"), [&] { validate(m); });
        return m;
    }
    if (type == "etfe") {
        EtfeBilinear m{s.number("E"), s.number("H"), s.number("G_e"), s.number("nu"),
                       s.number("sigma_Y"), s.optional_number("eps_Y")};
        s.finish();
        checked(s.key("type"), [&] { validate(m); });
        return m;
    }
    throw ConfigError(s.key("type"), "must be 'orthotropic' or 'etfe'");
}

inline ProjectionMode parse_projection(Section s) {
    const std::string mode = s.string("mode");
    ProjectionMode p;
    if (mode == "parallel") {
        p = ProjectionMode::parallel_to(s.has("normal") ? s.vec3("normal") : Vec3::UnitZ(),
                                        s.has("origin") ? s.vec3("origin") : Vec3::Zero());
        if (!(p.normal.norm() > 0.0)) throw ConfigError(s.key("normal"), "must be non-zero");
    } else if (mode == "toward_point") {
        p = ProjectionMode::toward(s.has("center") ? std::optional<Vec3>(s.vec3("center"))
                                                   : std::nullopt);
    } else {
        throw ConfigError(s.key("mode"), "must be 'parallel' or 'toward_point'");
    }
    s.finish();
    return p;
}

inline void parse_solver(Section s, SolverConfig &c) {
    c.max_iterations = s.integer("max_iterations", c.max_iterations);
    c.grad_tol = s.number("grad_tol", c.grad_tol);
    c.history_size = s.integer("history_size", c.history_size);
    c.armijo = s.number("armijo", c.armijo);
    c.backtrack = s.number("backtrack", c.backtrack);
    c.step_init = s.number("step_init", c.step_init);
    c.max_backtracks = s.integer("max_backtracks", c.max_backtracks);
    s.finish();
    checked(s.key("max_iterations"), [&] { validate(c); });
}

} // namespace detail

/// Parses a configuration document; `base` resolves relative mesh paths.
inline RunConfig parse_run_config(const nlohmann::json &doc, const std::filesystem::path &base = ".") {
    detail::Section root(doc, "");
    RunConfig cfg;
    cfg.model = detail::parse_model(root.section("model"), base);
    cfg.material = detail::parse_material(root.section("material"));

    auto t = root.section("target");
    cfg.target = {t.number("sigma1"), t.number("sigma2")};
    t.finish();
    if (!(cfg.target.sigma1 > 0.0)) throw ConfigError("target.sigma1", "must be positive (tension)");
    if (!(cfg.target.sigma2 > 0.0)) throw ConfigError("target.sigma2", "must be positive (tension)");

    if (root.has("pressure")) {
        const double p = root.number("pressure");
        if (!(p >= 0.0)) throw ConfigError("pressure", "must be non-negative");
        cfg.pressure = PressureLoad{p};
    }
    if (cfg.model.kind == ModelSpec::Kind::cushion && !cfg.pressure)
        throw ConfigError("pressure", "required for a cushion model");

    cfg.projection = root.has("projection") ? detail::parse_projection(root.section("projection"))
                                            : ProjectionMode::parallel_to(Vec3::UnitZ());

    if (root.has("loop")) {
        auto l = root.section("loop");
        cfg.loop.c = l.number("c", cfg.loop.c);
        cfg.loop.max_steps = l.integer("max_steps", cfg.loop.max_steps);
        cfg.loop.stop_tol = l.number("stop_tol", cfg.loop.stop_tol);
        cfg.loop.reproject_each_step = l.boolean("reproject_each_step", cfg.loop.reproject_each_step);
        l.finish();
        if (!(cfg.loop.c > 0.0 && cfg.loop.c <= 2.0)) throw ConfigError("loop.c", "must lie in (0, 2]");
        if (cfg.loop.max_steps < 1) throw ConfigError("loop.max_steps", "must be >= 1");
    }
    if (root.has("solver")) detail::parse_solver(root.section("solver"), cfg.loop.solver);
    if (root.has("fit")) {
        auto f = root.section("fit");
        cfg.loop.fit.grad_tol = f.number("grad_tol", cfg.loop.fit.grad_tol);
        if (!(cfg.loop.fit.grad_tol > 0.0)) throw ConfigError("fit.grad_tol", "must be positive");
        if (f.has("solver")) detail::parse_solver(f.section("solver"), cfg.loop.fit.solver);
        f.finish();
    }
    if (root.has("output")) {
        auto o = root.section("output");
        cfg.output = o.string("directory");
        o.finish();
    }
    root.finish();
    return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path &path) {
    const std::string text = read_file(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
    }
    return parse_run_config(doc, path.parent_path());
}

inline SurfaceMesh build_model(const ModelSpec &m) {
    switch (m.kind) {
    case ModelSpec::Kind::hp: return generate_hp_mesh(m.width, m.divisions);
    case ModelSpec::Kind::cushion:
        return generate_square_cushion_mesh(m.width, m.lift, m.divisions, m.sheets);
    case ModelSpec::Kind::file: return load_mesh(m.mesh);
    }
    throw InvalidArgument("build_model: unknown model kind");
}

inline MaterialModel make_material(const MaterialModel::Variant &v) {
    return std::visit([](const auto &m) { return MaterialModel(m); }, v);
}

} // namespace membrane
