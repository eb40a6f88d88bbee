#pragma once

/// @file checks.hpp
/// @brief Numerical identities of the discrete model: first variation of E_f,
/// energy dissipation along the flows, and smooth test directions.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "fharmonic/diagnostics.hpp"
#include "fharmonic/flow.hpp"

namespace fharm {

/// dE_f(u)(xi) = first_variation_factor * <F, xi>_L2 for tangent xi, F the
/// f-harmonic defect. With E_f = int f |grad u|^2 the factor is -2.
inline constexpr double first_variation_factor = -2.0;

/// E_f(t1) - E_f(t2) = dissipation_factor(kind) * int ||v||^2 dt, with v the
/// flow velocity: the gradient flow has v = F, Landau-Lifshitz has |v|^2 = 2 |F|^2.
inline constexpr double dissipation_factor(FlowKind kind) { return kind == FlowKind::gradient ? 2.0 : 1.0; }

/// Random smooth tangent direction: a few low Fourier modes with random
/// R^3 coefficients, projected onto T_u S^2 node by node.
inline TangentField smooth_tangent_direction(const SphereField& u, std::uint64_t seed, int modes = 3) {
    const Grid& g = u.grid();
    std::mt19937_64 rng(seed);
    auto uniform = [&] { return 2.0 * detail::unit_uniform(rng) - 1.0; };
    struct Mode {
        int kx, ky;
        double phase;
        Vec3 a;
    };
    std::vector<Mode> ms;
    for (int kx = 0; kx <= modes; ++kx) {
        for (int ky = -modes; ky <= modes; ++ky) {
            if (kx == 0 && ky <= 0) continue;
            ms.push_back({kx, ky, std::numbers::pi * uniform(), {uniform(), uniform(), uniform()}});
        }
    }
    TangentField xi(g);
    const double tx = 2.0 * std::numbers::pi / g.lx(), ty = 2.0 * std::numbers::pi / g.ly();
    for (std::size_t k = 0; k < g.size(); ++k) {
        const Point2 p = g.point(k);
        Vec3 w;
        for (const auto& m : ms) w += std::cos(m.kx * tx * p.x + m.ky * ty * p.y + m.phase) * m.a;
        xi[k] = project_tangent(u[k], w);
    }
    return xi;
}

struct GradientCheck {
    double finite_difference = 0.0;  ///< (E(P(u + s xi)) - E(P(u - s xi))) / 2s
    double pairing = 0.0;            ///< first_variation_factor * <F, xi>
    double rel_error = 0.0;
};

namespace detail {

inline SphereField displaced(const SphereField& u, std::span<const Vec3> xi, double s) {
    SphereField out = u;
    for (std::size_t k = 0; k < u.size(); ++k) out[k] = normalized(u[k] + s * xi[k]);
    return out;
}

inline double relative_gap(double a, double b, double scale) {
    const double d = std::abs(a - b);
    const double m = std::max({std::abs(a), std::abs(b), scale});
    return m > 0.0 ? d / m : 0.0;
}

}  // namespace detail

/// Compares the central finite difference of E_f along xi with the pairing
/// against `residual`. The relative error is taken against the larger of the
/// two numbers, floored at 1e-12 E_f(u) so exact zeros compare as zero.
inline GradientCheck gradient_check(const SphereField& u, const Coupling& c, const TangentField& xi,
                                    const TangentField& residual, double s) {
    GradientCheck out;
    const double ep = energy(detail::displaced(u, xi.values, s), c);
    const double em = energy(detail::displaced(u, xi.values, -s), c);
    out.finite_difference = (ep - em) / (2.0 * s);
    out.pairing = first_variation_factor * l2_inner(residual.values, xi.values, u.grid().cell_area());
    out.rel_error = detail::relative_gap(out.finite_difference, out.pairing, 1e-12 * energy(u, c));
    return out;
}

inline GradientCheck gradient_check(const SphereField& u, const Coupling& c, const TangentField& xi, double s) {
    return gradient_check(u, c, xi, ps_residual(u, c), s);
}

struct DissipationCheck {
    double e0 = 0.0;
    double delta_energy = 0.0;       ///< E_f(end) - E_f(0)
    double predicted = 0.0;          ///< -dissipation_factor * sum ||v||^2 dt
    double rel_error = 0.0;          ///< |delta - predicted| / E_f(0)
    double max_increase = 0.0;       ///< largest per-step growth of E_f
    double max_norm_deviation = 0.0; ///< max over steps of ||u| - 1|
    std::size_t steps = 0;
};

/// Runs `steps` explicit steps and accumulates the discrete dissipation
/// identity with the left-endpoint velocity of every step.
inline DissipationCheck dissipation_check(const SphereField& initial, const Coupling& c, const FlowConfig& cfg,
                                          std::size_t steps) {
    cfg.validate();
    const Grid& g = initial.grid();
    const double dt = resolve_dt(cfg, g, c);
    FlowState st(initial);
    detail::StepWorkspace ws(g.size());
    std::vector<Vec3> v(g.size());
    DissipationCheck out;
    out.e0 = energy(initial, c);
    double e = out.e0, sum = 0.0;
    for (std::size_t n = 0; n < steps; ++n) {
        detail::eval_velocity(cfg.kind, st.field, c, ws, v);
        sum += l2_inner(v, v, g.cell_area()) * dt;
        detail::advance(st, c, cfg, dt, v, ws);
        const double e1 = energy(st.field, c);
        out.max_increase = std::max(out.max_increase, e1 - e);
        out.max_norm_deviation = std::max(out.max_norm_deviation, st.field.max_norm_deviation());
        e = e1;
    }
    out.steps = steps;
    out.delta_energy = e - out.e0;
    out.predicted = -dissipation_factor(cfg.kind) * sum;
    out.rel_error = out.e0 > 0.0 ? std::abs(out.delta_energy - out.predicted) / out.e0 : 0.0;
    return out;
}

/// Least-squares slope of log(err) against log(h).
inline double convergence_order(std::span<const double> h, std::span<const double> err) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double x = std::log(h[i]), y = std::log(err[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace fharm
