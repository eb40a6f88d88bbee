// Energy, local energy, Hopf differential, domain variation and concentration detection.

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <numeric>

#include "fharmonic/checks.hpp"
#include "fharmonic/diagnostics.hpp"

using namespace fharm;
using Catch::Approx;

namespace {

Coupling cosine(const Grid& g, double ax = 0.25, double ay = 0.25) {
    CouplingParams p;
    p.kind = CouplingKind::cosine;
    p.amplitude_x = ax;
    p.amplitude_y = ay;
    return make_coupling(g, p);
}

CutoffParams aligned_cutoff() {
    CutoffParams p;
    p.center = {0.375, 0.5625};
    p.a = 0.125;
    p.b_inner = 0.1875;
    p.b_outer = 0.25;
    p.delta = 0.125;
    p.direction = {1.0, 0.0};
    return p;
}

// u = (sin a(x), 0, cos a(x)), a(x) = 2 pi x + b sin(2 pi x).
SphereField phase_field(const Grid& g, double b) {
    std::vector<Vec3> u(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double x = g.point(k).x;
        const double a = 2.0 * std::numbers::pi * x + b * std::sin(2.0 * std::numbers::pi * x);
        u[k] = {std::sin(a), 0.0, std::cos(a)};
    }
    return SphereField(g, std::move(u));
}

}  // namespace

TEST_CASE("energy density sums to the energy", "[diagnostics]") {
    const Grid g(48, 32, 1.5, 1.0);
    const Coupling c = cosine(g);
    const SphereField u = perturb(bubble_field(g, {{0.7, 0.4}, 0.1}), 0.1, 3);
    const auto d = energy_density(u, c);
    const double sum = std::accumulate(d.begin(), d.end(), 0.0) * g.cell_area();
    CHECK(sum == Approx(energy(u, c)).epsilon(1e-13));
    for (double v : d) CHECK(v >= 0.0);
}

TEST_CASE("energy of constant maps vanishes", "[diagnostics]") {
    const Grid g(16, 16, 1.0, 1.0);
    CHECK(energy(constant_field(g, {0.3, -0.2, 0.9}), cosine(g)) == 0.0);
}

TEST_CASE("energy scales linearly with f", "[diagnostics]") {
    const Grid g(32, 32, 1.0, 1.0);
    const SphereField u = bubble_field(g, {{0.5, 0.5}, 0.1});
    CouplingParams p;
    p.kind = CouplingKind::cosine;
    p.amplitude_x = 0.2;
    p.amplitude_y = 0.1;
    const double e1 = energy(u, make_coupling(g, p));
    CouplingParams q = p;
    q.base *= 2.0;
    q.amplitude_x *= 2.0;
    q.amplitude_y *= 2.0;
    CHECK(energy(u, make_coupling(g, q)) == 2.0 * e1);
    q = p;
    q.base *= 3.0;
    q.amplitude_x *= 3.0;
    q.amplitude_y *= 3.0;
    CHECK(energy(u, make_coupling(g, q)) == Approx(3.0 * e1).epsilon(1e-14));
}

TEST_CASE("local energy grows with the radius", "[diagnostics]") {
    const Grid g(64, 64, 1.0, 1.0);
    const Coupling c = cosine(g);
    const SphereField u = bubble_field(g, {{0.3, 0.6}, 0.08});
    double prev = 0.0;
    for (double r : {0.05, 0.1, 0.2, 0.3, 0.5}) {
        const double e = local_energy(u, c, {0.3, 0.6}, r);
        CHECK(e >= prev);
        prev = e;
    }
    CHECK(local_energy(u, c, {0.3, 0.6}, 0.75) == Approx(energy(u, c)).epsilon(1e-12));
}

TEST_CASE("radius validation", "[diagnostics]") {
    const Grid g(32, 32, 1.0, 1.0);
    const std::vector<double> ok{0.2, 0.1}, small{0.2, 0.05}, unordered{0.1, 0.2}, none{};
    CHECK_NOTHROW(validate_radii(g, ok));
    CHECK_THROWS_AS(validate_radii(g, small), std::invalid_argument);
    CHECK_THROWS_AS(validate_radii(g, unordered), std::invalid_argument);
    CHECK_THROWS_AS(validate_radii(g, none), std::invalid_argument);
}

TEST_CASE("Hopf identity factor from a closed-form field", "[diagnostics][oracle]") {
    // For u = (sin a, 0, cos a): Psi = a'^2, d_zbar Psi = a' a'', <Lap u, u_z> = a' a'' / 2.
    const double b = 0.4;
    const double k = 2.0 * std::numbers::pi;
    for (double x : {0.1, 0.33, 0.71}) {
        const double a1 = k + b * k * std::cos(k * x);
        const double a2 = -b * k * k * std::sin(k * x);
        const double dzbar_psi = 0.5 * (2.0 * a1 * a2);
        const double lap_uz = 0.5 * a1 * a2;
        CHECK(dzbar_psi / lap_uz == Approx(2.0));
    }
    CHECK(hopf_identity_factor == 2.0);
}

TEST_CASE("Hopf identity residual is second order", "[diagnostics]") {
    std::vector<double> h, err, err_f;
    for (std::size_t n : {64u, 128u, 256u}) {
        const Grid g(n, n, 1.0, 1.0);
        const SphereField u = phase_field(g, 0.4);
        const HopfResidual r1 = hopf_identity(u, make_coupling(g, {}));
        // Smooth data only: the bubble's C^2 gluing taper caps the order near 1.6.
        const HopfResidual r2 = hopf_identity(great_circle_field(g, 1), cosine(g));
        h.push_back(1.0 / static_cast<double>(n));
        err.push_back(r1.residual / r1.scale);
        err_f.push_back(r2.residual / r2.scale);
    }
    CHECK(convergence_order(h, err) == Approx(2.0).margin(0.2));
    CHECK(convergence_order(h, err_f) == Approx(2.0).margin(0.2));
    CHECK(err.back() < 1e-2);
}

TEST_CASE("Hopf differential of a conformal bubble is small", "[diagnostics]") {
    const Grid g(128, 128, 1.0, 1.0);
    const SphereField u = bubble_field(g, {{0.5, 0.5}, 0.1});
    const auto psi = hopf(u);
    const FieldGradient d = grad(u);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < psi.size(); ++k) {
        if (g.distance(g.point(k), {0.5, 0.5}) > 0.1) continue;
        num += std::norm(psi[k]);
        den += d.norm_sq(k) * d.norm_sq(k);
    }
    // The core is conformal up to the gluing factor and truncation error.
    CHECK(std::sqrt(num / den) < 0.05);
}

TEST_CASE("domain variation of trivial configurations", "[diagnostics]") {
    const Grid g(32, 32, 1.0, 1.0);
    const Coupling c = cosine(g);
    const SphereField u = bubble_field(g, {{0.5, 0.5}, 0.1});
    const ConstantVectorField zero{{0.0, 0.0}};
    CHECK(variation_lhs(u, c, zero, 0.25 * g.hx()) == 0.0);
    CHECK(variation_rhs(u, c, zero) == 0.0);
    const CutoffField x = make_cutoff(g, aligned_cutoff());
    const SphereField k = constant_field(g, {0.0, 0.0, 1.0});
    CHECK(variation_lhs(k, c, x, 0.25 * g.hx()) == 0.0);
    CHECK(variation_rhs(k, c, x) == 0.0);
    CHECK_THROWS_AS(variation_lhs(u, c, x, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(variation_lhs(u, c, x, 2.0 * g.hx()), std::invalid_argument);
}

TEST_CASE("translations do not change the constant-f energy", "[diagnostics]") {
    const Grid g(64, 64, 1.0, 1.0);
    const Coupling one = make_coupling(g, {});
    const SphereField u = perturb(bubble_field(g, {{0.4, 0.6}, 0.1}), 0.05, 8);
    const ConstantVectorField t{{0.6, -0.8}};
    CHECK(variation_rhs(u, one, t) == 0.0);
    CHECK(std::abs(variation_lhs(u, one, t, 0.25 * g.hx())) <= 1e-8 * energy(u, one));
}

TEST_CASE("domain variation pair agrees to second order in h", "[diagnostics]") {
    std::vector<double> h, err;
    for (std::size_t n : {32u, 64u, 128u}) {
        const Grid g(n, n, 1.0, 1.0);
        const Coupling c = cosine(g);
        const SphereField u = great_circle_field(g);
        const CutoffField x = make_cutoff(g, aligned_cutoff());
        const double lhs = variation_lhs(u, c, x, 0.25 * g.hx());
        const double rhs = variation_rhs(u, c, x);
        h.push_back(g.hx());
        err.push_back(std::abs(lhs - rhs));
        CHECK(std::abs(rhs) > 0.1);
    }
    CHECK(convergence_order(h, err) >= 1.8);
}

TEST_CASE("variation pair equals minus the defect paired with du(X)", "[diagnostics]") {
    // d/ds (1/2) E_f(u o phi_s) = (1/2) dE_f(du X) = -<F, du X>.
    const Grid g(128, 128, 1.0, 1.0);
    const Coupling c = cosine(g);
    const SphereField u = bubble_field(g, {{0.5, 0.5}, 0.15});
    const CutoffField x = make_cutoff(g, aligned_cutoff());
    const FieldGradient d = grad(u);
    const TangentField f = ps_residual(u, c);
    double pair = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const Vec2 xv = x.eval(g.point(k)).value;
        pair += dot(f[k], xv.x * d.ux[k] + xv.y * d.uy[k]);
    }
    pair *= g.cell_area();
    const double lhs = variation_lhs(u, c, x, 0.25 * g.hx());
    CHECK(lhs == Approx(-pair).epsilon(0.02));
}

TEST_CASE("ledger row contents", "[diagnostics]") {
    const Grid g(64, 64, 1.0, 1.0);
    const Coupling c = cosine(g);
    const SphereField u = bubble_field(g, {{0.75, 0.5}, 0.08});
    const TangentField f = ps_residual(u, c);
    const TangentField v = ll_velocity(u, c);
    DiagnosticsConfig cfg;
    const LedgerRow row = make_ledger_row(3, 0.5, u, c, v.values, f.values, cfg, critical_points(c));
    CHECK(row.step == 3);
    CHECK(row.t == 0.5);
    CHECK(row.energy == energy(u, c));
    CHECK(row.v_norm_sq == Approx(2.0 * l2_norm_sq(f)).epsilon(1e-12));
    CHECK(row.ps_norm == Approx(l2_norm(f)).epsilon(1e-12));
    CHECK(g.distance(row.argmax, {0.75, 0.5}) <= g.hx() * 1.01);
    REQUIRE(row.local_energy.size() == 3);
    CHECK(row.local_energy[0] >= row.local_energy[1]);
    CHECK(row.dist_to_crit == Approx(0.25).margin(g.hx() * 1.01));

    const LedgerRow flat = make_ledger_row(0, 0.0, u, make_coupling(g, {}), v.values, f.values, cfg,
                                           critical_points(make_coupling(g, {})));
    CHECK(std::isnan(flat.dist_to_crit));
}

TEST_CASE("concentration detection", "[diagnostics]") {
    const Grid g(128, 128, 1.0, 1.0);
    const Coupling c = cosine(g);
    const CriticalSet crit = critical_points(c);
    const DiagnosticsConfig cfg;

    const ConcentrationReport none =
        detect_concentration({}, constant_field(g, {0.0, 0.0, 1.0}), c, crit, cfg);
    CHECK_FALSE(none.detected);
    CHECK(none.drift.empty());

    const SphereField u = bubble_field(g, {{0.7, 0.5}, 0.05});
    const ConcentrationReport rep = detect_concentration({}, u, c, crit, cfg);
    CHECK(rep.detected);
    CHECK(g.distance(rep.location, {0.7, 0.5}) <= g.hx());
    REQUIRE(rep.nearest.has_value());
    CHECK(rep.nearest->kind == CriticalKind::minimum);
    CHECK(rep.nearest->distance == Approx(0.2).margin(g.hx()));
    CHECK(rep.profile.back() >= cfg.eps_conc);
    CHECK(rep.threshold == Approx(0.3 * 8.0 * std::numbers::pi));

    const double r[3][3] = {{0, 0, 1}, {1, 0, 0}, {0, 1, 0}};
    const ConcentrationReport rot = detect_concentration({}, rotate(u, r), c, crit, cfg);
    CHECK(rot.location.x == rep.location.x);
    CHECK(rot.location.y == rep.location.y);
    for (std::size_t i = 0; i < rep.profile.size(); ++i) {
        CHECK(rot.profile[i] == Approx(rep.profile[i]).epsilon(1e-12));
    }

    const ConcentrationReport flat = detect_concentration({}, u, make_coupling(g, {}),
                                                          critical_points(make_coupling(g, {})), cfg);
    CHECK(flat.everywhere_critical);
    CHECK_FALSE(flat.nearest.has_value());
}

TEST_CASE("late-window liminf estimate", "[diagnostics]") {
    const Grid g(64, 64, 1.0, 1.0);
    const Coupling c = cosine(g);
    DiagnosticsConfig cfg;
    cfg.radii = {0.3, 0.2};
    DiagnosticsLedger ledger{cfg.radii, {}};
    const double smallest[] = {30.0, 25.0, 20.0, 22.0};
    for (int i = 0; i < 4; ++i) {
        LedgerRow row;
        row.t = i;
        row.max_density = 1.0;
        row.argmax = {0.5, 0.5};
        row.local_energy = {40.0, smallest[i]};
        ledger.rows.push_back(row);
    }
    cfg.late_window = 0.5;
    const ConcentrationReport rep =
        detect_concentration(ledger, bubble_field(g, {{0.5, 0.5}, 0.1}), c, critical_points(c), cfg);
    CHECK(rep.limit_estimate == 20.0);
    CHECK(rep.drift.size() == 4);
}
