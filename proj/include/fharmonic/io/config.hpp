#pragma once

/// @file config.hpp
/// @brief Strict "section.key = value" run configuration.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fharmonic/coupling.hpp"
#include "fharmonic/diagnostics.hpp"
#include "fharmonic/field.hpp"
#include "fharmonic/flow.hpp"

namespace fharm::io {

/// Parse or validation failure; `line` is 0 when no single line is to blame.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::size_t line, std::string key, const std::string& msg)
        : std::runtime_error(format(line, key, msg)), line_(line), key_(std::move(key)) {}

    std::size_t line() const { return line_; }
    const std::string& key() const { return key_; }

private:
    static std::string format(std::size_t line, const std::string& key, const std::string& msg) {
        std::string s = "config";
        if (line > 0) s += ":" + std::to_string(line);
        if (!key.empty()) s += ": " + key;
        return s + ": " + msg;
    }

    std::size_t line_;
    std::string key_;
};

enum class InitialKind { constant, bubble, great_circle, perturbed };
enum class SnapshotFormat { binary, csv, both, none };

struct InitialConfig {
    InitialKind kind = InitialKind::constant;
    InitialKind base = InitialKind::constant;  ///< field perturbed when kind == perturbed
    Vec3 direction{0.0, 0.0, 1.0};
    std::optional<Point2> center;              ///< defaults to the domain center
    double scale = 0.05;
    Vec3 background{0.0, 0.0, -1.0};
    double amplitude = 0.0;
    std::uint64_t seed = 0;
    int axis = 0;
    int winding = 1;
};

struct OutputConfig {
    std::string directory = ".";
    SnapshotFormat snapshots = SnapshotFormat::binary;
    bool heatmap = true;
};

struct RelaxConfig {
    double tol = 1e-10;
    std::size_t max_steps = 200000;
    double cfl_safety = 0.9;
};

struct CheckConfig {
    std::size_t directions = 5;
    std::uint64_t seed = 1;
    double s = 1e-5;
    std::size_t dissipation_steps = 200;
};

struct ExperimentConfig {
    CriticalKind anchor = CriticalKind::minimum;
    Vec2 offset{0.2, 0.0};
};

struct RunConfig {
    std::size_t nx = 0, ny = 0;
    double lx = 1.0, ly = 1.0;
    CouplingParams coupling;
    std::optional<std::vector<Vec2>> coupling_gradient;  ///< explicit node gradient for sampled f
    InitialConfig initial;
    FlowConfig flow;
    DiagnosticsConfig diagnostics;
    OutputConfig output;
    RelaxConfig relax;
    CheckConfig check;
    ExperimentConfig experiment;
};

namespace detail {

struct Entry {
    std::string value;
    std::size_t line;
    bool used = false;
};

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"grid", {"nx", "ny", "lx", "ly"}},
        {"coupling",
         {"kind", "base", "amplitude_x", "amplitude_y", "mode_x", "mode_y", "samples", "gradient_samples"}},
        {"initial",
         {"kind", "base", "direction", "center", "scale", "background", "amplitude", "seed", "axis", "winding"}},
        {"flow",
         {"kind", "integrator", "dt", "cfl", "t_end", "snapshot_every", "diagnostic_every", "stationary_tol",
          "resolution_cells", "energy_guard", "max_steps"}},
        {"diagnostics", {"radii", "eps_fraction", "late_window"}},
        {"output", {"directory", "snapshots", "heatmap"}},
        {"relax", {"tol", "max_steps", "cfl"}},
        {"check", {"directions", "seed", "s", "dissipation_steps"}},
        {"experiment", {"anchor", "offset"}},
    };
    return s;
}

inline std::vector<double> read_numbers(const std::filesystem::path& path, std::size_t line, const std::string& key) {
    std::ifstream in(path);
    if (!in) throw ConfigError(line, key, "cannot open '" + path.string() + "'");
    std::vector<double> v;
    std::string tok;
    while (in >> tok) {
        double x = 0.0;
        const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), x);
        if (r.ec != std::errc{} || r.ptr != tok.data() + tok.size()) {
            throw ConfigError(line, key, "bad number '" + tok + "' in '" + path.string() + "'");
        }
        v.push_back(x);
    }
    return v;
}

/// Typed access to the parsed entries; marks each key it reads.
class Reader {
public:
    explicit Reader(std::map<std::string, Entry>& e) : e_(e) {}

    bool has(const std::string& key) const { return e_.count(key) > 0; }
    std::size_t line(const std::string& key) const { return has(key) ? e_.at(key).line : 0; }

    const std::string* raw(const std::string& key) {
        auto it = e_.find(key);
        if (it == e_.end()) return nullptr;
        it->second.used = true;
        return &it->second.value;
    }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        throw ConfigError(line(key), key, msg);
    }

    std::vector<double> numbers(const std::string& key) {
        const std::string& s = *raw(key);
        std::vector<double> out;
        std::istringstream in(s);
        std::string tok;
        while (in >> tok) {
            double x = 0.0;
            const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), x);
            if (r.ec != std::errc{} || r.ptr != tok.data() + tok.size() || !std::isfinite(x)) {
                fail(key, "'" + tok + "' is not a finite number");
            }
            out.push_back(x);
        }
        return out;
    }

    void get(const std::string& key, double& out) {
        if (!has(key)) return;
        const auto v = numbers(key);
        if (v.size() != 1) fail(key, "expected one number");
        out = v[0];
    }

    template <class Int>
        requires std::is_integral_v<Int>
    void get(const std::string& key, Int& out) {
        if (!has(key)) return;
        const std::string& s = *raw(key);
        Int x{};
        const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
        if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) fail(key, "'" + s + "' is not a valid integer");
        out = x;
    }

    void get(const std::string& key, Vec3& out) {
        if (!has(key)) return;
        const auto v = numbers(key);
        if (v.size() != 3) fail(key, "expected three numbers");
        out = {v[0], v[1], v[2]};
    }

    void get(const std::string& key, Vec2& out) {
        if (!has(key)) return;
        const auto v = numbers(key);
        if (v.size() != 2) fail(key, "expected two numbers");
        out = {v[0], v[1]};
    }

    void get(const std::string& key, bool& out) {
        if (!has(key)) return;
        const std::string& s = *raw(key);
        if (s == "true" || s == "yes" || s == "1") out = true;
        else if (s == "false" || s == "no" || s == "0") out = false;
        else fail(key, "expected true or false");
    }

    void get(const std::string& key, std::string& out) {
        if (has(key)) out = *raw(key);
    }

    template <class E>
    void choose(const std::string& key, E& out, std::initializer_list<std::pair<const char*, E>> options) {
        choose(key, out, std::span<const std::pair<const char*, E>>(options.begin(), options.size()));
    }

    template <class E>
    void choose(const std::string& key, E& out, std::span<const std::pair<const char*, E>> options) {
        if (!has(key)) return;
        const std::string& s = *raw(key);
        std::string names;
        for (const auto& [name, value] : options) {
            if (s == name) {
                out = value;
                return;
            }
            names += names.empty() ? name : std::string(", ") + name;
        }
        fail(key, "'" + s + "' is not one of: " + names);
    }

private:
    std::map<std::string, Entry>& e_;
};

inline std::span<const std::pair<const char*, InitialKind>> initial_kinds() {
    static constexpr std::pair<const char*, InitialKind> kinds[] = {{"constant", InitialKind::constant},
                                                                     {"bubble", InitialKind::bubble},
                                                                     {"great-circle", InitialKind::great_circle},
                                                                     {"perturbed", InitialKind::perturbed}};
    return kinds;
}

}  // namespace detail

inline Grid build_grid(const RunConfig& cfg) { return Grid(cfg.nx, cfg.ny, cfg.lx, cfg.ly); }

inline Coupling build_coupling(const RunConfig& cfg, const Grid& g) {
    Coupling c = make_coupling(g, cfg.coupling);
    if (cfg.coupling_gradient) return Coupling::sampled(g, {c.values().begin(), c.values().end()}, *cfg.coupling_gradient);
    return c;
}

inline Point2 initial_center(const RunConfig& cfg) {
    return cfg.initial.center.value_or(Point2{0.5 * cfg.lx, 0.5 * cfg.ly});
}

inline SphereField build_base_field(const RunConfig& cfg, const Grid& g, InitialKind kind) {
    const InitialConfig& in = cfg.initial;
    switch (kind) {
        case InitialKind::bubble: return bubble_field(g, {initial_center(cfg), in.scale, in.background});
        case InitialKind::great_circle: return great_circle_field(g, in.axis, in.winding);
        case InitialKind::constant:
        case InitialKind::perturbed: break;
    }
    return constant_field(g, in.direction);
}

inline SphereField build_initial(const RunConfig& cfg, const Grid& g) {
    if (cfg.initial.kind != InitialKind::perturbed) return build_base_field(cfg, g, cfg.initial.kind);
    return perturb(build_base_field(cfg, g, cfg.initial.base), cfg.initial.amplitude, cfg.initial.seed);
}

/// Parses and validates a configuration. `base_dir` resolves relative sample
/// file paths. Every error names the offending line and key.
inline RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {}) {
    using detail::Entry;
    std::map<std::string, Entry> entries;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(lineno, "", "expected 'section.key = value'");
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string value(detail::trim(line.substr(eq + 1)));
        const auto dot = key.find('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 == key.size()) {
            throw ConfigError(lineno, key, "key must have the form section.key");
        }
        const std::string section = key.substr(0, dot);
        const auto sec = detail::schema().find(section);
        if (sec == detail::schema().end()) throw ConfigError(lineno, key, "unknown section '" + section + "'");
        if (!sec->second.count(key.substr(dot + 1))) throw ConfigError(lineno, key, "unknown key");
        if (value.empty()) throw ConfigError(lineno, key, "missing value");
        if (auto it = entries.find(key); it != entries.end()) {
            throw ConfigError(lineno, key,
                              "duplicate key (lines " + std::to_string(it->second.line) + " and " +
                                  std::to_string(lineno) + ")");
        }
        entries.emplace(key, Entry{value, lineno});
    }

    for (const char* required : {"grid", "coupling", "initial", "flow"}) {
        const std::string prefix = std::string(required) + ".";
        bool found = false;
        for (const auto& [k, e] : entries) found = found || k.rfind(prefix, 0) == 0;
        if (!found) throw ConfigError(0, required, "missing required section");
    }

    detail::Reader r(entries);
    RunConfig cfg;

    // grid
    for (const char* k : {"grid.nx", "grid.ny"}) {
        if (!r.has(k)) throw ConfigError(0, k, "missing required key");
    }
    r.get("grid.nx", cfg.nx);
    r.get("grid.ny", cfg.ny);
    r.get("grid.lx", cfg.lx);
    r.get("grid.ly", cfg.ly);
    std::optional<Grid> grid;
    try {
        grid.emplace(build_grid(cfg));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(r.line("grid.nx"), "grid", e.what());
    }

    // coupling
    if (!r.has("coupling.kind")) throw ConfigError(0, "coupling.kind", "missing required key");
    r.choose("coupling.kind", cfg.coupling.kind,
             {{"constant", CouplingKind::constant}, {"cosine", CouplingKind::cosine}, {"sampled", CouplingKind::sampled}});
    r.get("coupling.base", cfg.coupling.base);
    r.get("coupling.amplitude_x", cfg.coupling.amplitude_x);
    r.get("coupling.amplitude_y", cfg.coupling.amplitude_y);
    r.get("coupling.mode_x", cfg.coupling.mode_x);
    r.get("coupling.mode_y", cfg.coupling.mode_y);
    if (cfg.coupling.kind == CouplingKind::sampled) {
        if (!r.has("coupling.samples")) throw ConfigError(r.line("coupling.kind"), "coupling.samples", "required for sampled f");
        cfg.coupling.samples = detail::read_numbers(base_dir / *r.raw("coupling.samples"), r.line("coupling.samples"),
                                                    "coupling.samples");
        if (r.has("coupling.gradient_samples")) {
            const auto v = detail::read_numbers(base_dir / *r.raw("coupling.gradient_samples"),
                                                r.line("coupling.gradient_samples"), "coupling.gradient_samples");
            if (v.size() != 2 * grid->size()) {
                r.fail("coupling.gradient_samples", "expected " + std::to_string(2 * grid->size()) + " numbers");
            }
            std::vector<Vec2> gradient(grid->size());
            for (std::size_t k = 0; k < gradient.size(); ++k) gradient[k] = {v[2 * k], v[2 * k + 1]};
            cfg.coupling_gradient = std::move(gradient);
        }
    } else {
        for (const char* k : {"coupling.samples", "coupling.gradient_samples"}) {
            if (r.has(k)) r.fail(k, "only valid with coupling.kind = sampled");
        }
    }
    try {
        build_coupling(cfg, *grid);
    } catch (const std::invalid_argument& e) {
        const char* blame = r.has("coupling.amplitude_x") ? "coupling.amplitude_x" : "coupling.kind";
        throw ConfigError(r.line(blame), "coupling", e.what());
    }

    // initial
    if (!r.has("initial.kind")) throw ConfigError(0, "initial.kind", "missing required key");
    r.choose("initial.kind", cfg.initial.kind, detail::initial_kinds());
    r.choose("initial.base", cfg.initial.base, detail::initial_kinds());
    if (cfg.initial.base == InitialKind::perturbed) r.fail("initial.base", "a perturbed field cannot be the base");
    r.get("initial.direction", cfg.initial.direction);
    if (r.has("initial.center")) {
        Vec2 c;
        r.get("initial.center", c);
        cfg.initial.center = Point2{c.x, c.y};
    }
    r.get("initial.scale", cfg.initial.scale);
    r.get("initial.background", cfg.initial.background);
    r.get("initial.amplitude", cfg.initial.amplitude);
    r.get("initial.seed", cfg.initial.seed);
    r.get("initial.axis", cfg.initial.axis);
    r.get("initial.winding", cfg.initial.winding);
    if (cfg.initial.axis != 0 && cfg.initial.axis != 1) r.fail("initial.axis", "must be 0 or 1");
    try {
        build_initial(cfg, *grid);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(r.line("initial.kind"), "initial", e.what());
    }

    // flow
    FlowConfig& f = cfg.flow;
    r.choose("flow.kind", f.kind, {{"gradient", FlowKind::gradient}, {"landau-lifshitz", FlowKind::landau_lifshitz}});
    r.choose("flow.integrator", f.integrator, {{"euler", Integrator::euler}, {"rk4", Integrator::rk4}});
    if (r.has("flow.dt") && r.has("flow.cfl")) {
        throw ConfigError(r.line("flow.cfl"), "flow.cfl", "flow.dt and flow.cfl are mutually exclusive");
    }
    if (r.has("flow.dt")) {
        f.dt_policy = DtPolicy::fixed;
        r.get("flow.dt", f.dt);
    }
    r.get("flow.cfl", f.cfl_safety);
    r.get("flow.t_end", f.t_end);
    r.get("flow.snapshot_every", f.snapshot_every);
    r.get("flow.diagnostic_every", f.diagnostic_every);
    r.get("flow.stationary_tol", f.stationary_tol);
    r.get("flow.resolution_cells", f.resolution_cells);
    r.get("flow.energy_guard", f.energy_guard);
    r.get("flow.max_steps", f.max_steps);
    try {
        f.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(r.line("flow.kind"), "flow", e.what());
    }

    // diagnostics
    if (r.has("diagnostics.radii")) {
        cfg.diagnostics.radii = r.numbers("diagnostics.radii");
    } else {
        // Fractions of the shorter side, keeping those the grid resolves.
        cfg.diagnostics.radii.clear();
        const double m = std::min(cfg.lx, cfg.ly);
        for (double q : {0.25, 0.15, 0.1}) {
            if (q * m > 2.0 * grid->max_spacing()) cfg.diagnostics.radii.push_back(q * m);
        }
        if (cfg.diagnostics.radii.empty()) r.fail("grid.nx", "grid too coarse for the default diagnostic radii");
    }
    double frac = 0.3;
    r.get("diagnostics.eps_fraction", frac);
    if (!(frac > 0.0)) r.fail("diagnostics.eps_fraction", "must be positive");
    cfg.diagnostics.eps_conc = frac * bubble_energy;
    r.get("diagnostics.late_window", cfg.diagnostics.late_window);
    if (!(cfg.diagnostics.late_window > 0.0 && cfg.diagnostics.late_window <= 1.0)) {
        r.fail("diagnostics.late_window", "must lie in (0, 1]");
    }
    try {
        validate_radii(*grid, cfg.diagnostics.radii);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(r.line("diagnostics.radii"), "diagnostics.radii", e.what());
    }

    // output
    r.get("output.directory", cfg.output.directory);
    r.choose("output.snapshots", cfg.output.snapshots,
             {{"binary", SnapshotFormat::binary}, {"csv", SnapshotFormat::csv}, {"both", SnapshotFormat::both},
              {"none", SnapshotFormat::none}});
    r.get("output.heatmap", cfg.output.heatmap);

    // relax
    r.get("relax.tol", cfg.relax.tol);
    r.get("relax.max_steps", cfg.relax.max_steps);
    r.get("relax.cfl", cfg.relax.cfl_safety);
    if (!(cfg.relax.tol > 0.0)) r.fail("relax.tol", "must be positive");
    if (!(cfg.relax.cfl_safety > 0.0 && cfg.relax.cfl_safety <= 1.0)) r.fail("relax.cfl", "must lie in (0, 1]");

    // check
    r.get("check.directions", cfg.check.directions);
    r.get("check.seed", cfg.check.seed);
    r.get("check.s", cfg.check.s);
    r.get("check.dissipation_steps", cfg.check.dissipation_steps);
    if (!(cfg.check.s > 0.0)) r.fail("check.s", "must be positive");

    // experiment
    r.choose("experiment.anchor", cfg.experiment.anchor,
             {{"min", CriticalKind::minimum}, {"max", CriticalKind::maximum}, {"saddle", CriticalKind::saddle}});
    r.get("experiment.offset", cfg.experiment.offset);

    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open config '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

}  // namespace fharm::io
