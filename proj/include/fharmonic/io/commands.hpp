#pragma once

/// @file commands.hpp
/// @brief CLI subcommand drivers: run, relax, check, blowup-experiment.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include "fharmonic/checks.hpp"
#include "fharmonic/cutoff.hpp"
#include "fharmonic/io/config.hpp"
#include "fharmonic/io/ledger.hpp"
#include "fharmonic/io/snapshot.hpp"
#include "fharmonic/relax.hpp"

namespace fharm::io {

enum ExitCode : int {
    exit_ok = 0,
    exit_io = 1,
    exit_config = 2,
    exit_under_resolved = 3,
    exit_numerical = 4,
    exit_not_converged = 5,
    exit_check_failed = 6,
    exit_inconclusive = 7,
};

struct CommandOptions {
    std::filesystem::path config;
    std::optional<std::filesystem::path> output_dir;
};

/// Thresholds of the check table. Each is a measured O(h^2) constant with a
/// margin of roughly 2-3x on smooth reference fields, h the larger spacing.
/// The pointwise constant runs from about 6 (great circle) to 57 (bubbles of
/// core 0.1-0.15); a wrong gradient of f gives a relative error of order 1.
struct CheckThresholds {
    double gradient = 1e-4;              ///< relative, conservative pairing
    double gradient_pointwise_h2 = 100.0;  ///< relative / h^2, pointwise pairing
    double variation_h2 = 100.0;         ///< |lhs - rhs| / (h^2 E_f)
    double hopf_h2 = 200.0;              ///< residual / scale / h^2
    double dissipation = 0.02;           ///< relative to E_f(0)
    double monotone = 1e-8;              ///< largest per-step increase / E_f(0)
};

namespace detail {

struct Context {
    RunConfig cfg;
    std::filesystem::path out_dir;
};

/// Loads the config and prepares the output directory; returns an exit code
/// on failure.
inline std::optional<int> prepare(const CommandOptions& opt, Context& ctx, std::ostream& err) {
    try {
        ctx.cfg = load_config(opt.config);
    } catch (const ConfigError& e) {
        err << "error: " << opt.config.string() << ": " << e.what() << '\n';
        return exit_config;
    } catch (const std::ios_base::failure& e) {
        err << "error: " << e.what() << '\n';
        return exit_io;
    }
    ctx.out_dir = opt.output_dir.value_or(std::filesystem::path(ctx.cfg.output.directory));
    if (ctx.out_dir.is_relative() && !opt.output_dir) ctx.out_dir = opt.config.parent_path() / ctx.out_dir;
    std::error_code ec;
    std::filesystem::create_directories(ctx.out_dir, ec);
    if (ec) {
        err << "error: cannot create output directory '" << ctx.out_dir.string() << "': " << ec.message() << '\n';
        return exit_io;
    }
    return std::nullopt;
}

inline void write_field(const Context& ctx, const std::string& stem, const SphereField& u) {
    const SnapshotFormat f = ctx.cfg.output.snapshots;
    if (f == SnapshotFormat::binary || f == SnapshotFormat::both) write_snapshot(ctx.out_dir / (stem + ".bin"), u);
    if (f == SnapshotFormat::csv || f == SnapshotFormat::both) write_snapshot_csv(ctx.out_dir / (stem + ".csv"), u);
}

inline void write_heatmap(const Context& ctx, const std::string& name, const SphereField& u, const Coupling& c) {
    if (ctx.cfg.output.heatmap) write_pgm(ctx.out_dir / ("density_" + name + ".pgm"), u.grid(), energy_density(u, c));
}

inline void write_text(const std::filesystem::path& path, const auto& writer) {
    std::ofstream out(path);
    writer(out);
    if (!out) throw std::ios_base::failure("cannot write '" + path.string() + "'");
}

inline std::string step_stem(std::size_t step) {
    char b[32];
    std::snprintf(b, sizeof b, "snapshot_%08zu", step);
    return b;
}

inline int exit_for(EvolveStatus s) {
    switch (s) {
        case EvolveStatus::under_resolved: return exit_under_resolved;
        case EvolveStatus::non_finite:
        case EvolveStatus::unstable: return exit_numerical;
        default: return exit_ok;
    }
}

inline LedgerRow initial_row(const SphereField& u, const Coupling& c, const RunConfig& cfg, const CriticalSet& crit) {
    const TangentField res = ps_residual(u, c);
    TangentField v(u.grid());
    fharm::detail::velocity_into(cfg.flow.kind, u, res.values, v.values);
    return make_ledger_row(0, 0.0, u, c, v.values, res.values, cfg.diagnostics, crit);
}

/// Runs evolve with snapshot output and writes ledger.csv; the ledger always
/// holds at least the initial row.
inline EvolveResult run_flow(const Context& ctx, const SphereField& u0, const Coupling& c, const CriticalSet& crit) {
    FlowSinks sinks;
    if (ctx.cfg.output.snapshots != SnapshotFormat::none) {
        sinks.on_snapshot = [&](const FlowState& st) { write_field(ctx, step_stem(st.step), st.field); };
    }
    EvolveResult r = evolve(u0, c, ctx.cfg.flow, ctx.cfg.diagnostics, sinks);
    if (r.ledger.rows.empty()) r.ledger.rows.push_back(initial_row(u0, c, ctx.cfg, crit));
    write_text(ctx.out_dir / "ledger.csv", [&](std::ostream& o) { write_ledger(o, r.ledger); });
    return r;
}

inline void add_run_summary(Report& rep, const EvolveResult& r) {
    rep.add("status", to_string(r.status));
    if (!r.message.empty()) rep.add("message", r.message);
    if (r.node) rep.add("failure_node", *r.node);
    rep.add("dt", r.dt);
    rep.add("steps", r.state.step);
    rep.add("t_final", r.state.t);
    rep.add("ledger_rows", r.ledger.rows.size());
    if (!r.ledger.rows.empty()) {
        rep.add("energy_initial", r.ledger.rows.front().energy);
        rep.add("energy_final", r.ledger.rows.back().energy);
    }
}

/// Cutoff aligned with the x axis whose center and kinks lie on grid lines,
/// so the quadrature of the kinked plateau stays second order.
inline CutoffParams check_cutoff(const Grid& g) {
    const double m = std::min(g.lx(), g.ly());
    const auto cells = [&](double len) { return std::max(1.0, std::round(len / g.hx())); };
    CutoffParams p;
    p.center = g.point(g.index(std::lround(0.375 * g.nx()), std::lround(0.5625 * g.ny())));
    p.b_outer = cells(0.25 * m) * g.hx();
    p.b_inner = p.b_outer - cells(0.0625 * m) * g.hx();
    p.a = 0.5 * p.b_inner;
    p.delta = 0.125 * m;
    p.direction = {1.0, 0.0};
    return p;
}

}  // namespace detail

inline int cmd_run(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    detail::Context ctx;
    if (auto rc = detail::prepare(opt, ctx, err)) return *rc;
    try {
        const Grid g = build_grid(ctx.cfg);
        const Coupling c = build_coupling(ctx.cfg, g);
        const SphereField u0 = build_initial(ctx.cfg, g);
        const CriticalSet crit = critical_points(c);
        detail::write_heatmap(ctx, "initial", u0, c);
        const EvolveResult r = detail::run_flow(ctx, u0, c, crit);
        const ConcentrationReport conc = detect_concentration(r.ledger, r.state.field, c, crit, ctx.cfg.diagnostics);
        Report rep;
        rep.add("command", "run");
        detail::add_run_summary(rep, r);
        add_concentration(rep, conc);
        detail::write_text(ctx.out_dir / "report.txt", [&](std::ostream& o) { o << rep; });
        if (ctx.cfg.output.snapshots != SnapshotFormat::none) detail::write_field(ctx, "snapshot_final", r.state.field);
        detail::write_heatmap(ctx, "final", r.state.field, c);
        out << "run: " << to_string(r.status) << " after " << r.state.step << " steps, t = " << r.state.t << '\n';
        if (r.failed()) err << "error: " << r.message << '\n';
        return detail::exit_for(r.status);
    } catch (const std::ios_base::failure& e) {
        err << "error: " << e.what() << '\n';
        return exit_io;
    }
}

inline int cmd_relax(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    detail::Context ctx;
    if (auto rc = detail::prepare(opt, ctx, err)) return *rc;
    try {
        const Grid g = build_grid(ctx.cfg);
        const Coupling c = build_coupling(ctx.cfg, g);
        const SphereField u0 = build_initial(ctx.cfg, g);
        std::optional<RelaxResult> result;
        try {
            result = relax(u0, c, ctx.cfg.relax.tol, ctx.cfg.relax.max_steps, ctx.cfg.relax.cfl_safety);
        } catch (const BlowupError& e) {
            err << "error: " << e.what() << '\n';
            return exit_numerical;
        }
        const RelaxResult& r = *result;
        detail::write_text(ctx.out_dir / "ps_history.csv", [&](std::ostream& o) {
            o << "step,ps_norm\n";
            for (std::size_t n = 0; n < r.ps_history.size(); ++n) o << n << ',' << detail::fmt(r.ps_history[n]) << '\n';
        });
        if (ctx.cfg.output.snapshots != SnapshotFormat::none) detail::write_field(ctx, "snapshot_final", r.field);
        detail::write_heatmap(ctx, "final", r.field, c);
        Report rep;
        rep.add("command", "relax");
        rep.add("status", r.converged ? "converged" : "not converged");
        rep.add("tolerance", ctx.cfg.relax.tol);
        rep.add("steps", r.steps);
        rep.add("ps_norm_final", ps_norm(r.field, c));
        rep.add("energy_initial", energy(u0, c));
        rep.add("energy_final", energy(r.field, c));
        detail::write_text(ctx.out_dir / "report.txt", [&](std::ostream& o) { o << rep; });
        out << "relax: " << (r.converged ? "converged" : "not converged") << " after " << r.steps
            << " steps, ps_norm = " << ps_norm(r.field, c) << '\n';
        return r.converged ? exit_ok : exit_not_converged;
    } catch (const std::ios_base::failure& e) {
        err << "error: " << e.what() << '\n';
        return exit_io;
    }
}

struct CheckRow {
    std::string name;
    double measured;
    double threshold;
    bool pass() const { return measured <= threshold; }
};

/// Evaluates every identity on the configured field and coupling.
inline std::vector<CheckRow> run_checks(const RunConfig& cfg, const CheckThresholds& th = {}) {
    const Grid g = build_grid(cfg);
    const Coupling c = build_coupling(cfg, g);
    const SphereField u = build_initial(cfg, g);
    const double h = g.max_spacing();
    const double e = energy(u, c);
    std::vector<CheckRow> rows;

    const TangentField tight = ps_residual(u, c);
    const TangentField pointwise = ps_residual_pointwise(u, c);
    double worst = 0.0, worst_pw = 0.0;
    for (std::size_t d = 0; d < cfg.check.directions; ++d) {
        const TangentField xi = smooth_tangent_direction(u, cfg.check.seed + d);
        worst = std::max(worst, gradient_check(u, c, xi, tight, cfg.check.s).rel_error);
        worst_pw = std::max(worst_pw, gradient_check(u, c, xi, pointwise, cfg.check.s).rel_error);
    }
    rows.push_back({"gradient_check", worst, th.gradient});
    rows.push_back({"gradient_check_pointwise", worst_pw, th.gradient_pointwise_h2 * h * h});

    const CutoffField x = make_cutoff(g, detail::check_cutoff(g));
    const double lhs = variation_lhs(u, c, x, 0.25 * g.min_spacing());
    const double rhs = variation_rhs(u, c, x);
    rows.push_back({"variation_formula", std::abs(lhs - rhs), th.variation_h2 * h * h * e});

    const HopfResidual hr = hopf_identity(u, c);
    rows.push_back({"hopf_identity", hr.scale > 0.0 ? hr.residual / hr.scale : 0.0, th.hopf_h2 * h * h});

    const DissipationCheck dc = dissipation_check(u, c, cfg.flow, cfg.check.dissipation_steps);
    rows.push_back({"dissipation_identity", dc.rel_error, th.dissipation});
    rows.push_back({"energy_monotone", dc.e0 > 0.0 ? dc.max_increase / dc.e0 : dc.max_increase, th.monotone});
    return rows;
}

inline int cmd_check(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    detail::Context ctx;
    if (auto rc = detail::prepare(opt, ctx, err)) return *rc;
    std::vector<CheckRow> rows;
    try {
        rows = run_checks(ctx.cfg);
    } catch (const BlowupError& e) {
        err << "error: " << e.what() << '\n';
        return exit_numerical;
    }
    bool all = true;
    Report rep;
    rep.add("command", "check");
    char line[160];
    std::snprintf(line, sizeof line, "%-28s%-16s%-16s%s\n", "identity", "measured", "threshold", "result");
    out << line;
    for (const auto& r : rows) {
        all = all && r.pass();
        std::snprintf(line, sizeof line, "%-28s%-16.6e%-16.6e%s\n", r.name.c_str(), r.measured, r.threshold,
                      r.pass() ? "pass" : "FAIL");
        out << line;
        rep.add(r.name + ".measured", r.measured);
        rep.add(r.name + ".threshold", r.threshold);
        rep.add(r.name + ".pass", r.pass());
    }
    rep.add("all_pass", all);
    try {
        detail::write_text(ctx.out_dir / "report.txt", [&](std::ostream& o) { o << rep; });
    } catch (const std::ios_base::failure& e) {
        err << "error: " << e.what() << '\n';
        return exit_io;
    }
    return all ? exit_ok : exit_check_failed;
}

inline int cmd_blowup_experiment(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    detail::Context ctx;
    if (auto rc = detail::prepare(opt, ctx, err)) return *rc;
    RunConfig& cfg = ctx.cfg;
    if (cfg.initial.kind != InitialKind::bubble) {
        err << "error: blowup-experiment requires initial.kind = bubble\n";
        return exit_config;
    }
    try {
        const Grid g = build_grid(cfg);
        const Coupling c = build_coupling(cfg, g);
        const CriticalSet crit = critical_points(c);
        if (!crit.everywhere) {
            const auto anchor = crit.first(cfg.experiment.anchor);
            if (!anchor) {
                err << "error: coupling has no critical point of kind " << to_string(cfg.experiment.anchor) << '\n';
                return exit_config;
            }
            cfg.initial.center = g.wrap({anchor->location.x + cfg.experiment.offset.x * g.lx(),
                                         anchor->location.y + cfg.experiment.offset.y * g.ly()});
        }
        SphereField u0 = constant_field(g, {0.0, 0.0, 1.0});
        try {
            u0 = build_initial(cfg, g);
        } catch (const std::invalid_argument& e) {
            err << "error: " << e.what() << '\n';
            return exit_config;
        }
        detail::write_heatmap(ctx, "initial", u0, c);
        const EvolveResult r = detail::run_flow(ctx, u0, c, crit);
        const ConcentrationReport conc = detect_concentration(r.ledger, r.state.field, c, crit, cfg.diagnostics);

        double max_drift = 0.0;
        const Point2 start = r.ledger.rows.front().argmax;
        for (const auto& d : conc.drift) max_drift = std::max(max_drift, g.distance(start, d.location));

        Report rep;
        rep.add("command", "blowup-experiment");
        detail::add_run_summary(rep, r);
        rep.add("experiment.center_x", initial_center(cfg).x);
        rep.add("experiment.center_y", initial_center(cfg).y);
        if (crit.everywhere) {
            rep.add("experiment.note", "everywhere critical");
        } else {
            rep.add("experiment.anchor", to_string(cfg.experiment.anchor));
            rep.add("experiment.initial_distance", r.ledger.rows.front().dist_to_crit);
            rep.add("experiment.final_distance", conc.nearest ? conc.nearest->distance : std::nan(""));
        }
        rep.add("experiment.max_drift", max_drift);
        rep.add("experiment.max_drift_cells", max_drift / g.max_spacing());
        add_concentration(rep, conc);
        detail::write_text(ctx.out_dir / "report.txt", [&](std::ostream& o) { o << rep; });
        detail::write_text(ctx.out_dir / "drift.csv", [&](std::ostream& o) { write_drift(o, conc); });
        if (cfg.output.snapshots != SnapshotFormat::none) detail::write_field(ctx, "snapshot_final", r.state.field);
        detail::write_heatmap(ctx, "final", r.state.field, c);

        out << "blowup-experiment: " << to_string(r.status) << " at t = " << r.state.t << ", concentration "
            << (conc.detected ? "detected" : "not detected");
        if (conc.nearest) out << ", distance to critical point " << conc.nearest->distance;
        out << '\n';
        if (r.status == EvolveStatus::non_finite || r.status == EvolveStatus::unstable) {
            err << "error: " << r.message << '\n';
            return exit_numerical;
        }
        return conc.detected ? exit_ok : exit_inconclusive;
    } catch (const std::ios_base::failure& e) {
        err << "error: " << e.what() << '\n';
        return exit_io;
    }
}

}  // namespace fharm::io
