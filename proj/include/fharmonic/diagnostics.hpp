#pragma once

/// @file diagnostics.hpp
/// @brief Energies, local energies, Hopf differential, the domain-variation
/// pair, Palais-Smale norms and the concentration detector.
///
/// Energy convention: the ledger quantity is E_f = int f |grad u|^2 (no 1/2).
/// The variation pair (variation_lhs / variation_rhs) uses (1/2) E_f so that it
/// matches the classical domain-variation formula term by term.
///
/// Discrete energy: each grid edge carries the face-averaged weight
/// (f_i + f_j)/2 and the squared forward difference |u_j - u_i|^2 / h^2:
///   E_f = hx hy sum_nodes [ f_{i+1/2,j} |D+x u|^2 + f_{i,j+1/2} |D+y u|^2 ].
/// ps_residual (operators.hpp) is exactly -1/(2 hx hy) times its gradient in
/// the tangent directions, so dE_f(xi) = -2 <F, xi>_{L2}.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fharmonic/coupling.hpp"
#include "fharmonic/cutoff.hpp"
#include "fharmonic/field.hpp"
#include "fharmonic/grid.hpp"
#include "fharmonic/operators.hpp"
#include "fharmonic/vec.hpp"

namespace fharm {

/// Energy of a degree-one bubble, 8 pi (Dirichlet energy of the inverse stereographic map).
inline constexpr double bubble_energy = 8.0 * std::numbers::pi;

namespace detail {

inline double edge_energy(const Grid& g, std::span<const Vec3> u, std::span<const double> f) {
    const double ix2 = 1.0 / (g.hx() * g.hx());
    const double iy2 = 1.0 / (g.hy() * g.hy());
    double sum = 0.0;
    for_each_stencil(g, [&](std::size_t c, std::size_t, std::size_t e, std::size_t, std::size_t n) {
        sum += 0.5 * (f[c] + f[e]) * norm_sq(u[e] - u[c]) * ix2 + 0.5 * (f[c] + f[n]) * norm_sq(u[n] - u[c]) * iy2;
    });
    return sum * g.cell_area();
}

}  // namespace detail

/// E_f(u) = int f |grad u|^2.
inline double energy(const SphereField& u, const Coupling& c) {
    return detail::edge_energy(u.grid(), u.values(), c.values());
}

/// Pointwise f |grad u|^2: half of each incident edge's energy is assigned to
/// the node, so sum(density) hx hy == energy.
inline std::vector<double> energy_density(const SphereField& u, const Coupling& c) {
    const Grid& g = u.grid();
    const auto f = c.values();
    const double ix2 = 1.0 / (g.hx() * g.hx());
    const double iy2 = 1.0 / (g.hy() * g.hy());
    std::vector<double> e(g.size());
    detail::for_each_stencil(g, [&](std::size_t k, std::size_t w, std::size_t ea, std::size_t s, std::size_t n) {
        const double x = 0.5 * (f[k] + f[ea]) * norm_sq(u[ea] - u[k]) + 0.5 * (f[k] + f[w]) * norm_sq(u[k] - u[w]);
        const double y = 0.5 * (f[k] + f[n]) * norm_sq(u[n] - u[k]) + 0.5 * (f[k] + f[s]) * norm_sq(u[k] - u[s]);
        e[k] = 0.5 * (x * ix2 + y * iy2);
    });
    return e;
}

namespace detail {

/// Fraction of the cell around `node` lying inside the periodic disc B_r(p).
inline double covered_fraction(const Grid& g, const Point2& p, double r, const Point2& node) {
    constexpr int sub = 16;
    const double d = g.distance(p, node);
    const double half_diag = 0.5 * std::hypot(g.hx(), g.hy());
    if (d + half_diag <= r) return 1.0;
    if (d - half_diag >= r) return 0.0;
    int inside = 0;
    for (int b = 0; b < sub; ++b) {
        for (int a = 0; a < sub; ++a) {
            const Point2 q{node.x + ((a + 0.5) / sub - 0.5) * g.hx(), node.y + ((b + 0.5) / sub - 0.5) * g.hy()};
            if (g.distance(p, q) <= r) ++inside;
        }
    }
    return static_cast<double>(inside) / (sub * sub);
}

inline double local_sum(const Grid& g, std::span<const double> density, const Point2& p, double r) {
    if (!(r > 2.0 * g.max_spacing())) {
        throw std::invalid_argument("local_energy: radius must exceed two grid spacings");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (density[k] == 0.0) continue;
        const double w = covered_fraction(g, p, r, g.point(k));
        if (w > 0.0) sum += w * density[k];
    }
    return sum * g.cell_area();
}

}  // namespace detail

/// int_{B_r(p)} f |grad u|^2 over the periodic disc; cells cut by the circle
/// are weighted by their covered area.
inline double local_energy(const SphereField& u, const Coupling& c, const Point2& p, double r) {
    const auto e = energy_density(u, c);
    return detail::local_sum(u.grid(), e, p, r);
}

/// Hopf differential Psi = |u_x|^2 - |u_y|^2 - 2i <u_x, u_y> = 4 <u_z, u_z>.
inline std::vector<std::complex<double>> hopf(const SphereField& u) {
    const FieldGradient d = grad(u);
    std::vector<std::complex<double>> psi(u.size());
    for (std::size_t k = 0; k < psi.size(); ++k) {
        psi[k] = {norm_sq(d.ux[k]) - norm_sq(d.uy[k]), -2.0 * dot(d.ux[k], d.uy[k])};
    }
    return psi;
}

/// Coefficient in d_zbar Psi = c <Lap u, u_z> for Lap = d_xx + d_yy, z = x + iy.
inline constexpr double hopf_identity_factor = 2.0;

struct HopfResidual {
    double residual = 0.0;  ///< ||d_zbar Psi - 2 <Lap u, u_z>||_L2
    double scale = 0.0;     ///< ||Lap u| |grad u||_L2, the size of either side before cancellation
};

/// Residual r = d_zbar Psi - 2 <alpha grad u + g, u_z>, where
/// alpha grad u = -(grad f . grad u)/f and g = ps_residual / f, so that
/// alpha grad u + g is the discrete tension and the identity closes for any
/// smooth field up to truncation error.
inline HopfResidual hopf_identity(const SphereField& u, const Coupling& c) {
    const Grid& g = u.grid();
    const FieldGradient d = grad(u);
    const auto psi = hopf(u);
    const TangentField res = ps_residual(u, c);
    const double ix = 0.5 / g.hx(), iy = 0.5 / g.hy();
    const double ix2 = 1.0 / (g.hx() * g.hx()), iy2 = 1.0 / (g.hy() * g.hy());
    double sum = 0.0, ref = 0.0;
    detail::for_each_stencil(g, [&](std::size_t k, std::size_t w, std::size_t e, std::size_t s, std::size_t n) {
        const std::complex<double> psi_x = ix * (psi[e] - psi[w]);
        const std::complex<double> psi_y = iy * (psi[n] - psi[s]);
        const std::complex<double> dzbar = 0.5 * (psi_x + std::complex<double>(0.0, 1.0) * psi_y);
        const double f = c.value(k);
        const Vec2& gf = c.gradient(k);
        const Vec3 rhs = (1.0 / f) * (res[k] - (gf.x * d.ux[k] + gf.y * d.uy[k]));
        // <rhs, u_z> with u_z = (u_x - i u_y)/2
        const std::complex<double> pair(0.5 * dot(rhs, d.ux[k]), -0.5 * dot(rhs, d.uy[k]));
        sum += std::norm(dzbar - hopf_identity_factor * pair);
        const Vec3 lap = ix2 * (u[e] + u[w] - 2.0 * u[k]) + iy2 * (u[n] + u[s] - 2.0 * u[k]);
        ref += norm_sq(lap) * d.norm_sq(k);
    });
    return {std::sqrt(sum * g.cell_area()), std::sqrt(ref * g.cell_area())};
}

inline double hopf_residual(const SphereField& u, const Coupling& c) { return hopf_identity(u, c).residual; }

/// ||f tau(u) + grad f . grad u||_{L2}.
inline double ps_norm(const SphereField& u, const Coupling& c) { return l2_norm(ps_residual(u, c)); }

/// Right side of the domain-variation formula (1/2 convention):
///   -1/2 int |grad u|^2 f div X - 1/2 int df(X) |grad u|^2
///   + sum_a int <du(nabla_{e_a} X), du(e_a)> f.
template <PlanarVectorField F>
double variation_rhs(const SphereField& u, const Coupling& c, const F& x_field) {
    const Grid& g = u.grid();
    const FieldGradient d = grad(u);
    double sum = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const VectorFieldSample x = x_field.eval(g.point(k));
        const double f = c.value(k);
        const double gu2 = d.norm_sq(k);
        const double dfx = dot(c.gradient(k), x.value);
        const Vec3* du[2] = {&d.ux[k], &d.uy[k]};
        double stretch = 0.0;
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) stretch += x.jacobian.m[a][b] * dot(*du[a], *du[b]);
        }
        sum += -0.5 * gu2 * f * x.divergence - 0.5 * dfx * gu2 + stretch * f;
    }
    return sum * g.cell_area();
}

namespace detail {

/// Periodic cubic B-spline interpolant of node values. The spline is C^2, so
/// u o phi_s is twice differentiable in s even when phi_s moves nodes by less
/// than a cell; a C^1 interpolant (Catmull-Rom) leaves an O(s) term in the
/// central difference.
class BicubicSpline {
public:
    explicit BicubicSpline(const SphereField& u) : grid_(u.grid()), coef_(u.values().begin(), u.values().end()) {
        const std::size_t nx = grid_.nx(), ny = grid_.ny();
        std::vector<Vec3> line;
        for (std::size_t j = 0; j < ny; ++j) {
            line.assign(coef_.begin() + static_cast<long>(j * nx), coef_.begin() + static_cast<long>((j + 1) * nx));
            prefilter(line);
            std::copy(line.begin(), line.end(), coef_.begin() + static_cast<long>(j * nx));
        }
        line.resize(ny);
        for (std::size_t i = 0; i < nx; ++i) {
            for (std::size_t j = 0; j < ny; ++j) line[j] = coef_[j * nx + i];
            prefilter(line);
            for (std::size_t j = 0; j < ny; ++j) coef_[j * nx + i] = line[j];
        }
    }

    Vec3 operator()(const Point2& p) const {
        const double sx = p.x / grid_.hx(), sy = p.y / grid_.hy();
        const double fx = std::floor(sx), fy = std::floor(sy);
        double wx[4], wy[4];
        weights(sx - fx, wx);
        weights(sy - fy, wy);
        const long i0 = static_cast<long>(fx), j0 = static_cast<long>(fy);
        Vec3 acc;
        for (int b = 0; b < 4; ++b) {
            Vec3 row;
            for (int a = 0; a < 4; ++a) row += wx[a] * coef_[grid_.index(i0 - 1 + a, j0 - 1 + b)];
            acc += wy[b] * row;
        }
        return acc;
    }

private:
    /// Inverts (c[i-1] + 4 c[i] + c[i+1]) / 6 = v[i] on a periodic line with
    /// the exponential filter sqrt(3) z^|k|, z = sqrt(3) - 2, truncated where
    /// |z|^k drops below 1e-18.
    static void prefilter(std::vector<Vec3>& v) {
        const double z = std::sqrt(3.0) - 2.0;
        const long n = static_cast<long>(v.size());
        constexpr long reach = 32;
        std::vector<Vec3> out(v.size());
        for (long i = 0; i < n; ++i) {
            Vec3 acc = v[static_cast<std::size_t>(i)];
            double zk = 1.0;
            for (long k = 1; k <= reach; ++k) {
                zk *= z;
                acc += zk * (v[static_cast<std::size_t>(((i + k) % n + n) % n)] +
                             v[static_cast<std::size_t>(((i - k) % n + n) % n)]);
            }
            out[static_cast<std::size_t>(i)] = std::sqrt(3.0) * acc;
        }
        v = std::move(out);
    }

    /// Cubic B-spline weights for offsets -1, 0, 1, 2 at fractional position t.
    static void weights(double t, double w[4]) {
        const double t2 = t * t, t3 = t2 * t, m = 1.0 - t;
        w[0] = m * m * m / 6.0;
        w[1] = (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0;
        w[2] = (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0;
        w[3] = t3 / 6.0;
    }

    Grid grid_;
    std::vector<Vec3> coef_;
};

/// One classical RK4 step of size s along x' = X(x).
template <PlanarVectorField F>
Point2 flow_point(const F& x_field, const Point2& x, double s) {
    const Vec2 k1 = x_field.eval(x).value;
    const Vec2 k2 = x_field.eval(x + (0.5 * s) * k1).value;
    const Vec2 k3 = x_field.eval(x + (0.5 * s) * k2).value;
    const Vec2 k4 = x_field.eval(x + s * k3).value;
    return x + (s / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

template <PlanarVectorField F>
double composed_half_energy(const SphereField& u, const Coupling& c, const F& x_field, double s) {
    const Grid& g = u.grid();
    const BicubicSpline spline(u);
    std::vector<Vec3> moved(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) moved[k] = spline(flow_point(x_field, g.point(k), s));
    return 0.5 * edge_energy(g, moved, c.values());
}

}  // namespace detail

/// Central difference in s of (1/2) E_f(u o phi_s), phi_s the time-s flow of X.
template <PlanarVectorField F>
double variation_lhs(const SphereField& u, const Coupling& c, const F& x_field, double s) {
    if (!(s != 0.0 && std::abs(s) <= u.grid().min_spacing())) {
        throw std::invalid_argument("variation_lhs: step s must satisfy 0 < |s| <= min grid spacing");
    }
    return (detail::composed_half_energy(u, c, x_field, s) - detail::composed_half_energy(u, c, x_field, -s)) /
           (2.0 * s);
}

// ---------------------------------------------------------------------------
// Ledger and concentration detection

struct DiagnosticsConfig {
    std::vector<double> radii{0.2, 0.1, 0.05};  ///< strictly decreasing
    double eps_conc = 0.3 * bubble_energy;
    double late_window = 0.25;                  ///< fraction of ledger rows treated as "late"
};

struct LedgerRow {
    std::size_t step = 0;
    double t = 0.0;
    double energy = 0.0;
    double v_norm_sq = 0.0;
    double ps_norm = 0.0;
    double max_density = 0.0;
    Point2 argmax;
    std::vector<double> local_energy;
    double dist_to_crit = std::numeric_limits<double>::quiet_NaN();
};

struct DiagnosticsLedger {
    std::vector<double> radii;
    std::vector<LedgerRow> rows;
};

inline void validate_radii(const Grid& g, std::span<const double> radii) {
    if (radii.empty()) throw std::invalid_argument("diagnostics: at least one radius is required");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 2.0 * g.max_spacing())) {
            throw std::invalid_argument("diagnostics: radius " + std::to_string(radii[i]) +
                                        " is below two grid spacings");
        }
        if (i > 0 && !(radii[i] < radii[i - 1])) {
            throw std::invalid_argument("diagnostics: radii must be strictly decreasing");
        }
    }
}

/// Index of the largest entry; the lowest index wins ties.
inline std::size_t argmax_index(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

/// One ledger row for state u with flow velocity v and residual F.
inline LedgerRow make_ledger_row(std::size_t step, double t, const SphereField& u, const Coupling& c,
                                 std::span<const Vec3> velocity, std::span<const Vec3> residual,
                                 const DiagnosticsConfig& cfg, const CriticalSet& crit) {
    const Grid& g = u.grid();
    LedgerRow row;
    row.step = step;
    row.t = t;
    row.energy = energy(u, c);
    row.v_norm_sq = l2_inner(velocity, velocity, g.cell_area());
    row.ps_norm = std::sqrt(l2_inner(residual, residual, g.cell_area()));
    const auto density = energy_density(u, c);
    const std::size_t k = argmax_index(density);
    row.max_density = density[k];
    row.argmax = g.point(k);
    for (double r : cfg.radii) row.local_energy.push_back(detail::local_sum(g, density, row.argmax, r));
    if (auto nc = crit.nearest(g, row.argmax)) row.dist_to_crit = nc->distance;
    return row;
}

struct DriftSample {
    double t;
    Point2 location;
    double dist_to_crit;
};

struct ConcentrationReport {
    bool detected = false;
    bool everywhere_critical = false;
    double threshold = 0.0;
    Point2 location;
    double max_density = 0.0;
    std::vector<double> radii;
    std::vector<double> profile;      ///< local energy at each radius, final field
    double limit_estimate = 0.0;      ///< late-window minimum of the smallest-radius local energy
    std::optional<NearestCritical> nearest;
    std::vector<DriftSample> drift;
};

/// Blow-up-point test: argmax of the energy density, its multi-radius local
/// energy profile, and the nearest critical point of f. The liminf over the
/// sequence is realized as the minimum over the late window of ledger rows.
inline ConcentrationReport detect_concentration(const DiagnosticsLedger& ledger, const SphereField& u,
                                                const Coupling& c, const CriticalSet& crit,
                                                const DiagnosticsConfig& cfg) {
    const Grid& g = u.grid();
    validate_radii(g, cfg.radii);
    ConcentrationReport rep;
    rep.threshold = cfg.eps_conc;
    rep.radii = cfg.radii;
    rep.everywhere_critical = crit.everywhere;
    const auto density = energy_density(u, c);
    const std::size_t k = argmax_index(density);
    rep.max_density = density[k];
    rep.location = g.point(k);
    for (double r : cfg.radii) rep.profile.push_back(detail::local_sum(g, density, rep.location, r));
    rep.detected = rep.max_density > 0.0 && rep.profile.back() >= cfg.eps_conc;
    rep.nearest = crit.nearest(g, rep.location);

    rep.limit_estimate = rep.profile.back();
    const std::size_t n = ledger.rows.size();
    if (n > 0 && !ledger.radii.empty() && ledger.radii.back() == cfg.radii.back()) {
        const auto late = static_cast<std::size_t>(std::ceil(cfg.late_window * static_cast<double>(n)));
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = n - std::max<std::size_t>(late, 1); i < n; ++i) {
            m = std::min(m, ledger.rows[i].local_energy.back());
        }
        rep.limit_estimate = m;
    }
    for (const auto& row : ledger.rows) {
        if (row.max_density > 0.0) rep.drift.push_back({row.t, row.argmax, row.dist_to_crit});
    }
    return rep;
}

}  // namespace fharm
