// Time stepping: projected Euler / RK4, dt policies, evolve and its stop conditions.

#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "fharmonic/checks.hpp"
#include "fharmonic/flow.hpp"

using namespace fharm;
using Catch::Approx;

namespace {

Coupling cosine(const Grid& g) {
    CouplingParams p;
    p.kind = CouplingKind::cosine;
    p.amplitude_x = 0.25;
    p.amplitude_y = 0.25;
    return make_coupling(g, p);
}

DiagnosticsConfig coarse_radii() {
    DiagnosticsConfig d;
    d.radii = {0.3, 0.2};
    return d;
}

double max_diff(const SphereField& a, const SphereField& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, norm(a[k] - b[k]));
    return m;
}

SphereField run_steps(const SphereField& u, const Coupling& c, const FlowConfig& cfg, std::size_t n) {
    FlowState st(u);
    for (std::size_t i = 0; i < n; ++i) st = step(st, c, cfg);
    return st.field;
}

}  // namespace

TEST_CASE("cfl time step", "[flow]") {
    const Grid g(40, 20, 2.0, 0.5);
    const Coupling c = cosine(g);
    const double h = 0.025;
    CHECK(cfl_dt(g, c, 0.5) == Approx(0.5 * h * h / (4.0 * 1.5)).epsilon(1e-14));
    CHECK_THROWS_AS(cfl_dt(g, c, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(cfl_dt(g, c, 1.5), std::invalid_argument);
    FlowConfig f;
    f.dt_policy = DtPolicy::fixed;
    f.dt = 1e-3;
    CHECK(resolve_dt(f, g, c) == 1e-3);
}

TEST_CASE("flow config validation", "[flow]") {
    FlowConfig f;
    CHECK_NOTHROW(f.validate());
    f.dt_policy = DtPolicy::fixed;
    CHECK_THROWS_AS(f.validate(), std::invalid_argument);
    f = FlowConfig{};
    f.t_end = -1.0;
    CHECK_THROWS_AS(f.validate(), std::invalid_argument);
    f = FlowConfig{};
    f.diagnostic_every = 0;
    CHECK_THROWS_AS(f.validate(), std::invalid_argument);
    f = FlowConfig{};
    f.cfl_safety = 0.0;
    CHECK_THROWS_AS(f.validate(), std::invalid_argument);
}

TEST_CASE("constant maps do not move", "[flow]") {
    const Grid g(16, 16, 1.0, 1.0);
    const Coupling c = cosine(g);
    for (FlowKind kind : {FlowKind::gradient, FlowKind::landau_lifshitz}) {
        for (Integrator in : {Integrator::euler, Integrator::rk4}) {
            FlowConfig cfg;
            cfg.kind = kind;
            cfg.integrator = in;
            const SphereField north = constant_field(g, {0.0, 0.0, 1.0});
            CHECK(run_steps(north, c, cfg, 5) == north);
            const SphereField other = constant_field(g, {1.0, 2.0, -2.0});
            CHECK(max_diff(run_steps(other, c, cfg, 5), other) <= 1e-15);
        }
    }
}

TEST_CASE("steps keep the field on the sphere", "[flow]") {
    const Grid g(32, 32, 1.0, 1.0);
    const Coupling c = cosine(g);
    FlowConfig cfg;
    cfg.integrator = Integrator::rk4;
    const SphereField u = run_steps(perturb(bubble_field(g, {{0.5, 0.5}, 0.1}), 0.2, 1), c, cfg, 50);
    CHECK(u.max_norm_deviation() <= 1e-15);
}

TEST_CASE("per-step dissipation factors", "[flow][oracle]") {
    // (E(u1) - E(u0)) / (dt ||v||^2) -> -c as dt -> 0, measured directly.
    const Grid g(32, 32, 1.0, 1.0);
    const Coupling c = cosine(g);
    const SphereField u = bubble_field(g, {{0.4, 0.5}, 0.12});
    for (FlowKind kind : {FlowKind::gradient, FlowKind::landau_lifshitz}) {
        FlowConfig cfg;
        cfg.kind = kind;
        cfg.dt_policy = DtPolicy::fixed;
        cfg.dt = 1e-3 * cfl_dt(g, c, 1.0);
        const double v2 = l2_norm_sq(flow_velocity(kind, u, c));
        const double de = energy(step(FlowState(u), c, cfg).field, c) - energy(u, c);
        const double ratio = -de / (cfg.dt * v2);
        CHECK(ratio == Approx(dissipation_factor(kind)).epsilon(1e-3));
    }
    CHECK(dissipation_factor(FlowKind::gradient) == 2.0);
    CHECK(dissipation_factor(FlowKind::landau_lifshitz) == 1.0);
}

TEST_CASE("accumulated dissipation converges at first order in dt", "[flow]") {
    const Grid g(32, 32, 1.0, 1.0);
    const Coupling c = cosine(g);
    const SphereField u = bubble_field(g, {{0.4, 0.5}, 0.12});
    FlowConfig cfg;
    cfg.kind = FlowKind::landau_lifshitz;
    cfg.cfl_safety = 0.2;
    const DissipationCheck a = dissipation_check(u, c, cfg, 100);
    cfg.cfl_safety = 0.1;
    const DissipationCheck b = dissipation_check(u, c, cfg, 200);
    CHECK(a.max_increase <= 0.0);
    CHECK(b.max_increase <= 0.0);
    CHECK(a.max_norm_deviation <= 1e-15);
    CHECK(a.rel_error / b.rel_error == Approx(2.0).margin(0.2));
}

TEST_CASE("rk4 is more accurate than euler at the same step", "[flow]") {
    const Grid g(24, 24, 1.0, 1.0);
    const Coupling c = cosine(g);
    const SphereField u = perturb(great_circle_field(g), 0.2, 4);
    FlowConfig cfg;
    cfg.kind = FlowKind::landau_lifshitz;
    cfg.dt_policy = DtPolicy::fixed;
    cfg.dt = cfl_dt(g, c, 0.25);
    const SphereField euler = run_steps(u, c, cfg, 8);
    cfg.integrator = Integrator::rk4;
    const SphereField rk4 = run_steps(u, c, cfg, 8);
    cfg.dt /= 32.0;
    const SphereField ref = run_steps(u, c, cfg, 256);
    CHECK(max_diff(rk4, ref) < 0.5 * max_diff(euler, ref));
}

TEST_CASE("evolve with t_end = 0 returns the initial state", "[flow]") {
    const Grid g(16, 16, 1.0, 1.0);
    const SphereField u = bubble_field(g, {{0.5, 0.5}, 0.1});
    const EvolveResult r = evolve(u, cosine(g), FlowConfig{}, coarse_radii());
    CHECK(r.status == EvolveStatus::completed);
    CHECK(r.ledger.rows.empty());
    CHECK(r.state.field == u);
    CHECK(r.state.step == 0);
}

TEST_CASE("evolve cadence, snapshots and monotone energy", "[flow]") {
    const Grid g(32, 32, 1.0, 1.0);
    const Coupling c = cosine(g);
    FlowConfig cfg;
    cfg.kind = FlowKind::gradient;
    cfg.diagnostic_every = 5;
    cfg.snapshot_every = 4;
    cfg.t_end = 12.0 * cfl_dt(g, c, cfg.cfl_safety);
    std::vector<std::size_t> snaps, rows;
    FlowSinks sinks;
    sinks.on_snapshot = [&](const FlowState& s) { snaps.push_back(s.step); };
    sinks.on_row = [&](const LedgerRow& r) { rows.push_back(r.step); };
    const EvolveResult r = evolve(bubble_field(g, {{0.5, 0.5}, 0.12}), c, cfg, coarse_radii(), sinks);
    CHECK(r.status == EvolveStatus::completed);
    CHECK(r.state.step == 12);
    CHECK(r.state.t == Approx(cfg.t_end).epsilon(1e-14));
    CHECK(rows == std::vector<std::size_t>{0, 5, 10, 12});
    CHECK(snaps == std::vector<std::size_t>{0, 4, 8, 12});
    REQUIRE(r.ledger.rows.size() == 4);
    for (std::size_t i = 1; i < r.ledger.rows.size(); ++i) {
        CHECK(r.ledger.rows[i].energy <= r.ledger.rows[i - 1].energy);
        CHECK(r.ledger.rows[i].local_energy.size() == 2);
    }
}

TEST_CASE("evolve stops on a stationary field", "[flow]") {
    const Grid g(16, 16, 1.0, 1.0);
    FlowConfig cfg;
    cfg.t_end = 1.0;
    const EvolveResult r = evolve(constant_field(g, {0.0, 1.0, 0.0}), cosine(g), cfg, coarse_radii());
    CHECK(r.status == EvolveStatus::stationary);
    CHECK(r.ledger.rows.size() == 1);
    CHECK(r.state.step == 0);
    CHECK(std::isnan(r.ledger.rows[0].dist_to_crit) == false);
}

TEST_CASE("evolve honours max_steps", "[flow]") {
    const Grid g(16, 16, 1.0, 1.0);
    FlowConfig cfg;
    cfg.t_end = 1.0;
    cfg.max_steps = 7;
    cfg.diagnostic_every = 5;
    const EvolveResult r = evolve(bubble_field(g, {{0.5, 0.5}, 0.15}), cosine(g), cfg, coarse_radii());
    CHECK(r.status == EvolveStatus::max_steps);
    CHECK(r.state.step == 7);
    CHECK(r.ledger.rows.back().step == 7);
}

TEST_CASE("huge fixed dt is reported and keeps the partial ledger", "[flow]") {
    const Grid g(32, 32, 1.0, 1.0);
    FlowConfig cfg;
    cfg.dt_policy = DtPolicy::fixed;
    cfg.dt = 1.0;
    cfg.t_end = 100.0;
    cfg.resolution_cells = 0.0;
    const EvolveResult r = evolve(perturb(bubble_field(g, {{0.5, 0.5}, 0.15}), 0.3, 2), cosine(g), cfg,
                                  coarse_radii());
    CHECK(r.failed());
    CHECK(r.status == EvolveStatus::unstable);
    CHECK(r.ledger.rows.size() >= 2);
    CHECK_FALSE(r.message.empty());
}

TEST_CASE("under-resolved bubble stops the run", "[flow]") {
    const Grid g(32, 32, 1.0, 1.0);
    FlowConfig cfg;
    cfg.t_end = 1.0;
    const EvolveResult r = evolve(bubble_field(g, {{0.5, 0.5}, 0.02}), cosine(g), cfg, coarse_radii());
    CHECK(r.status == EvolveStatus::under_resolved);
    CHECK(r.ledger.rows.size() == 1);
    REQUIRE(r.node.has_value());
    CHECK(*r.node == g.index(16, 16));
    CHECK(r.message.find("under-resolved") != std::string::npos);
}

TEST_CASE("non-finite data is reported", "[flow]") {
    const Grid g(16, 16, 1.0, 1.0);
    SphereField u = constant_field(g, {0.0, 0.0, 1.0});
    u[17] = {std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0};
    FlowConfig cfg;
    cfg.t_end = 1.0;
    const EvolveResult r = evolve(u, cosine(g), cfg, coarse_radii());
    CHECK(r.status == EvolveStatus::non_finite);
    CHECK(r.failed());
}

TEST_CASE("evolve commutes with rotations", "[flow]") {
    const Grid g(32, 32, 1.0, 1.0);
    const Coupling c = cosine(g);
    const double r[3][3] = {{0.36, 0.48, -0.8}, {-0.8, 0.6, 0.0}, {0.48, 0.64, 0.6}};
    FlowConfig cfg;
    cfg.t_end = 40.0 * cfl_dt(g, c, cfg.cfl_safety);
    cfg.integrator = Integrator::rk4;
    const SphereField u = perturb(bubble_field(g, {{0.6, 0.4}, 0.12}), 0.1, 5);
    const EvolveResult a = evolve(rotate(u, r), c, cfg, coarse_radii());
    const EvolveResult b = evolve(u, c, cfg, coarse_radii());
    CHECK(max_diff(a.state.field, rotate(b.state.field, r)) <= 1e-10);
}
