#pragma once

/// @file flow.hpp
/// @brief Explicit time stepping of the gradient and Landau-Lifshitz flows
/// with nodewise renormalization onto S^2.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fharmonic/coupling.hpp"
#include "fharmonic/diagnostics.hpp"
#include "fharmonic/field.hpp"
#include "fharmonic/operators.hpp"

namespace fharm {

enum class DtPolicy { fixed, cfl };
enum class Integrator { euler, rk4 };

struct FlowConfig {
    FlowKind kind = FlowKind::landau_lifshitz;
    DtPolicy dt_policy = DtPolicy::cfl;
    double dt = 0.0;                 ///< used when dt_policy == fixed
    double cfl_safety = 0.25;        ///< used when dt_policy == cfl
    Integrator integrator = Integrator::euler;
    double t_end = 0.0;
    std::size_t snapshot_every = 0;  ///< 0 disables snapshots
    std::size_t diagnostic_every = 1;
    double stationary_tol = -1.0;    ///< ||v||_L2 threshold; negative selects 1e-8 * area
    double resolution_cells = 2.0;   ///< stop when the bubble core is below this many cells; 0 disables
    double energy_guard = 1e-6;      ///< abort when E_f grows by more than this fraction of E_f(0); 0 disables
    std::size_t max_steps = 0;       ///< 0 means unbounded

    void validate() const {
        if (dt_policy == DtPolicy::fixed && !(dt > 0.0 && std::isfinite(dt))) {
            throw std::invalid_argument("flow: fixed dt must be positive and finite");
        }
        if (dt_policy == DtPolicy::cfl && !(cfl_safety > 0.0 && cfl_safety <= 1.0)) {
            throw std::invalid_argument("flow: cfl safety must lie in (0, 1]");
        }
        if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("flow: t_end must be >= 0");
        if (diagnostic_every == 0) throw std::invalid_argument("flow: diagnostic_every must be >= 1");
        if (!(resolution_cells >= 0.0)) throw std::invalid_argument("flow: resolution_cells must be >= 0");
        if (!(energy_guard >= 0.0)) throw std::invalid_argument("flow: energy_guard must be >= 0");
    }
};

/// Explicit-diffusion bound dt = safety * min(hx, hy)^2 / (4 max f).
inline double cfl_dt(const Grid& grid, const Coupling& c, double safety) {
    if (!(safety > 0.0 && safety <= 1.0)) throw std::invalid_argument("cfl_dt: safety must lie in (0, 1]");
    const double h = grid.min_spacing();
    return safety * h * h / (4.0 * c.max_value());
}

inline double resolve_dt(const FlowConfig& cfg, const Grid& grid, const Coupling& c) {
    return cfg.dt_policy == DtPolicy::fixed ? cfg.dt : cfl_dt(grid, c, cfg.cfl_safety);
}

struct FlowState {
    SphereField field;
    double t = 0.0;
    std::size_t step = 0;
    TangentField last_velocity;

    explicit FlowState(SphereField u) : field(std::move(u)), last_velocity(field.grid()) {}
};

/// Raised when the evolution can no longer be trusted.
class BlowupError : public std::runtime_error {
public:
    enum class Reason { non_finite, under_resolved, unstable };

    BlowupError(Reason reason, std::size_t node, const std::string& what)
        : std::runtime_error(what), reason_(reason), node_(node) {}

    Reason reason() const { return reason_; }
    std::size_t node() const { return node_; }

private:
    Reason reason_;
    std::size_t node_;
};

namespace detail {

inline void check_finite(std::span<const Vec3> v, const char* what) {
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (!is_finite(v[k])) {
            throw BlowupError(BlowupError::Reason::non_finite, k,
                              std::string("blow-up under-resolved: non-finite ") + what + " at node " +
                                  std::to_string(k));
        }
    }
}

/// u <- P(u + dt v), P the nodewise renormalization.
inline void project_update(SphereField& u, std::span<const Vec3> v, double dt) {
    for (std::size_t k = 0; k < u.size(); ++k) u[k] = normalized(u[k] + dt * v[k]);
}

/// Work arrays reused across steps.
struct StepWorkspace {
    std::vector<Vec3> residual;
    std::vector<Vec3> k2, k3, k4;

    explicit StepWorkspace(std::size_t n) : residual(n) {}
};

/// Evaluates residual and velocity of `u` into ws.residual / v.
inline void eval_velocity(FlowKind kind, const SphereField& u, const Coupling& c, StepWorkspace& ws,
                          std::span<Vec3> v) {
    residual_into(u, c.values().data(), ws.residual);
    velocity_into(kind, u, ws.residual, v);
}

/// Advances `state` by dt given the velocity v1 already evaluated at state.field.
inline void advance(FlowState& state, const Coupling& c, const FlowConfig& cfg, double dt,
                    std::span<const Vec3> v1, StepWorkspace& ws) {
    check_finite(v1, "velocity");
    SphereField& u = state.field;
    if (cfg.integrator == Integrator::euler) {
        project_update(u, v1, dt);
    } else {
        const std::size_t n = u.size();
        ws.k2.resize(n);
        ws.k3.resize(n);
        ws.k4.resize(n);
        SphereField stage = u;
        auto stage_from = [&](std::span<const Vec3> k, double h) {
            for (std::size_t i = 0; i < n; ++i) stage[i] = u[i] + h * k[i];
        };
        std::vector<Vec3> res(n);
        auto eval = [&](std::span<Vec3> out) {
            residual_into(stage, c.values().data(), res);
            velocity_into(cfg.kind, stage, res, out);
        };
        stage_from(v1, 0.5 * dt);
        eval(ws.k2);
        stage_from(ws.k2, 0.5 * dt);
        eval(ws.k3);
        stage_from(ws.k3, dt);
        eval(ws.k4);
        for (std::size_t i = 0; i < n; ++i) {
            u[i] = normalized(u[i] + (dt / 6.0) * (v1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]));
        }
    }
    check_finite(u.values(), "field");
    std::copy(v1.begin(), v1.end(), state.last_velocity.values.begin());
    state.t += dt;
    ++state.step;
}

}  // namespace detail

/// One step u <- P(u + dt v) (or the RK4 analogue) with dt from the configured policy.
inline FlowState step(const FlowState& state, const Coupling& c, const FlowConfig& cfg) {
    cfg.validate();
    FlowState next = state;
    detail::StepWorkspace ws(state.field.size());
    std::vector<Vec3> v(state.field.size());
    detail::eval_velocity(cfg.kind, state.field, c, ws, v);
    detail::advance(next, c, cfg, resolve_dt(cfg, state.field.grid(), c), v, ws);
    return next;
}

/// Optional output channels for evolve.
struct FlowSinks {
    std::function<void(const LedgerRow&)> on_row;
    std::function<void(const FlowState&)> on_snapshot;
};

enum class EvolveStatus { completed, stationary, max_steps, under_resolved, non_finite, unstable };

inline const char* to_string(EvolveStatus s) {
    switch (s) {
        case EvolveStatus::completed: return "completed";
        case EvolveStatus::stationary: return "stationary";
        case EvolveStatus::max_steps: return "max_steps";
        case EvolveStatus::under_resolved: return "under_resolved";
        case EvolveStatus::non_finite: return "non_finite";
        case EvolveStatus::unstable: return "unstable";
    }
    return "?";
}

struct EvolveResult {
    FlowState state;
    DiagnosticsLedger ledger;
    EvolveStatus status = EvolveStatus::completed;
    std::string message;
    std::optional<std::size_t> node;
    double dt = 0.0;

    bool failed() const {
        return status == EvolveStatus::under_resolved || status == EvolveStatus::non_finite ||
               status == EvolveStatus::unstable;
    }
};

/// Bubble core size sqrt(8 f / density) at the density maximum of a ledger row.
inline double core_scale(const LedgerRow& row, const Coupling& c) {
    if (!(row.max_density > 0.0)) return std::numeric_limits<double>::infinity();
    return std::sqrt(8.0 * c.eval(row.argmax) / row.max_density);
}

/// Runs the configured flow from `initial` until t_end, stationarity, or a
/// blow-up condition. The ledger gathered up to the stopping point is always
/// returned; failures are reported through `status` rather than thrown.
inline EvolveResult evolve(const SphereField& initial, const Coupling& c, const FlowConfig& cfg,
                           const DiagnosticsConfig& diag, const FlowSinks& sinks = {}) {
    cfg.validate();
    const Grid& g = initial.grid();
    validate_radii(g, diag.radii);
    EvolveResult out{FlowState(initial), DiagnosticsLedger{diag.radii, {}}, EvolveStatus::completed, {}, {}, 0.0};
    out.dt = resolve_dt(cfg, g, c);
    if (cfg.t_end <= 0.0) return out;

    const CriticalSet crit = critical_points(c);
    const double tol = cfg.stationary_tol >= 0.0 ? cfg.stationary_tol : 1e-8 * g.area();
    const double t_eps = 1e-12 * out.dt;
    detail::StepWorkspace ws(g.size());
    std::vector<Vec3> v(g.size());
    FlowState& st = out.state;
    double e0 = -1.0;

    auto emit_row = [&]() -> bool {
        LedgerRow row = make_ledger_row(st.step, st.t, st.field, c, v, ws.residual, diag, crit);
        if (e0 < 0.0) e0 = row.energy;
        const bool grew = cfg.energy_guard > 0.0 && !out.ledger.rows.empty() &&
                          row.energy > out.ledger.rows.back().energy + cfg.energy_guard * e0;
        const double core = core_scale(row, c);
        out.ledger.rows.push_back(std::move(row));
        if (sinks.on_row) sinks.on_row(out.ledger.rows.back());
        if (!std::isfinite(out.ledger.rows.back().energy)) {
            out.status = EvolveStatus::non_finite;
            out.message = "energy became non-finite";
            return false;
        }
        if (grew) {
            out.status = EvolveStatus::unstable;
            out.message = "energy increased beyond guard; time step too large";
            return false;
        }
        if (cfg.resolution_cells > 0.0 && core < cfg.resolution_cells * g.min_spacing()) {
            out.status = EvolveStatus::under_resolved;
            out.node = g.index(std::lround(out.ledger.rows.back().argmax.x / g.hx()),
                               std::lround(out.ledger.rows.back().argmax.y / g.hy()));
            out.message = "blow-up under-resolved: core scale " + std::to_string(core) + " below " +
                          std::to_string(cfg.resolution_cells) + " cells";
            return false;
        }
        return true;
    };

    try {
        while (true) {
            detail::eval_velocity(cfg.kind, st.field, c, ws, v);
            const bool at_end = st.t >= cfg.t_end - t_eps;
            const bool row_due = st.step % cfg.diagnostic_every == 0 || at_end;
            if (row_due && !emit_row()) break;
            if (cfg.snapshot_every > 0 && st.step % cfg.snapshot_every == 0 && sinks.on_snapshot) {
                sinks.on_snapshot(st);
            }
            const double vnorm = std::sqrt(l2_inner(v, v, g.cell_area()));
            if (vnorm < tol) {
                if (!row_due && !emit_row()) break;
                out.status = EvolveStatus::stationary;
                break;
            }
            if (at_end) {
                out.status = EvolveStatus::completed;
                break;
            }
            if (cfg.max_steps > 0 && st.step >= cfg.max_steps) {
                if (!row_due) emit_row();
                out.status = EvolveStatus::max_steps;
                break;
            }
            detail::advance(st, c, cfg, std::min(out.dt, cfg.t_end - st.t), v, ws);
        }
    } catch (const BlowupError& e) {
        out.status = e.reason() == BlowupError::Reason::under_resolved ? EvolveStatus::under_resolved
                                                                        : EvolveStatus::non_finite;
        out.message = e.what();
        out.node = e.node();
    }
    return out;
}

}  // namespace fharm
