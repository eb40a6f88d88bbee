#pragma once

/// @file operators.hpp
/// @brief Discrete differential operators and flow right-hand sides.
///
/// Spatial scheme on the periodic grid:
///   * first derivatives: central differences D0;
///   * Laplacian: 5-point stencil;
///   * weighted divergence div(f grad u): f_i (5-point Laplacian) plus the
///     product term 1/2 (D+f D+u + D-f D-u) per axis. This is the exact
///     discrete gradient of the edge energy in diagnostics.hpp, so the first
///     variation of the discrete energy is reproduced to rounding.
/// Every TangentField returned here is projected onto the tangent plane of
/// the field it was computed from.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "fharmonic/coupling.hpp"
#include "fharmonic/field.hpp"
#include "fharmonic/grid.hpp"
#include "fharmonic/vec.hpp"

namespace fharm {

enum class FlowKind { gradient, landau_lifshitz };

inline const char* to_string(FlowKind k) { return k == FlowKind::gradient ? "gradient" : "landau-lifshitz"; }

/// Per-node 3-vectors tangent to a paired SphereField.
struct TangentField {
    Grid grid;
    std::vector<Vec3> values;

    explicit TangentField(const Grid& g) : grid(g), values(g.size()) {}
    std::size_t size() const { return values.size(); }
    const Vec3& operator[](std::size_t k) const { return values[k]; }
    Vec3& operator[](std::size_t k) { return values[k]; }
};

/// L2 inner product over the torus with the node quadrature weight hx*hy.
inline double l2_inner(std::span<const Vec3> a, std::span<const Vec3> b, double cell_area) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += dot(a[k], b[k]);
    return s * cell_area;
}

inline double l2_norm_sq(const TangentField& w) { return l2_inner(w.values, w.values, w.grid.cell_area()); }
inline double l2_norm(const TangentField& w) { return std::sqrt(l2_norm_sq(w)); }

struct FieldGradient {
    std::vector<Vec3> ux;
    std::vector<Vec3> uy;

    /// |u_x|^2 + |u_y|^2 at node k.
    double norm_sq(std::size_t k) const { return fharm::norm_sq(ux[k]) + fharm::norm_sq(uy[k]); }
};

/// Central-difference partial derivatives with periodic wrap.
inline FieldGradient grad(const SphereField& u) {
    const Grid& g = u.grid();
    FieldGradient d{std::vector<Vec3>(g.size()), std::vector<Vec3>(g.size())};
    const double ix = 0.5 / g.hx();
    const double iy = 0.5 / g.hy();
    const long nx = static_cast<long>(g.nx()), ny = static_cast<long>(g.ny());
    for (long j = 0; j < ny; ++j) {
        for (long i = 0; i < nx; ++i) {
            const std::size_t k = g.index(i, j);
            d.ux[k] = ix * (u[g.index(i + 1, j)] - u[g.index(i - 1, j)]);
            d.uy[k] = iy * (u[g.index(i, j + 1)] - u[g.index(i, j - 1)]);
        }
    }
    return d;
}

namespace detail {

/// Walks every node with its four periodic neighbours.
template <class Body>
void for_each_stencil(const Grid& g, Body&& body) {
    const std::size_t nx = g.nx(), ny = g.ny();
    for (std::size_t j = 0; j < ny; ++j) {
        const std::size_t jm = (j == 0 ? ny - 1 : j - 1) * nx;
        const std::size_t jp = (j + 1 == ny ? 0 : j + 1) * nx;
        const std::size_t jc = j * nx;
        for (std::size_t i = 0; i < nx; ++i) {
            const std::size_t im = i == 0 ? nx - 1 : i - 1;
            const std::size_t ip = i + 1 == nx ? 0 : i + 1;
            body(jc + i, jc + im, jc + ip, jm + i, jp + i);
        }
    }
}

/// F = P_u( f (Laplacian u) + 1/2 sum_axes (D+f D+u + D-f D-u) ).
/// With f == nullptr the weight is 1 and F = tension.
inline void residual_into(const SphereField& u, const double* f, std::span<Vec3> out) {
    const Grid& g = u.grid();
    const double ix2 = 1.0 / (g.hx() * g.hx());
    const double iy2 = 1.0 / (g.hy() * g.hy());
    const double ix = 0.5 / g.hx(), iy = 0.5 / g.hy();
    for_each_stencil(g, [&](std::size_t c, std::size_t w, std::size_t e, std::size_t s, std::size_t n) {
        const Vec3& uc = u[c];
        const Vec3 de = u[e] - uc;   // forward difference, x
        const Vec3 dw = uc - u[w];   // backward difference, x
        const Vec3 dn = u[n] - uc;
        const Vec3 ds = uc - u[s];
        const Vec3 lap = ix2 * (de - dw) + iy2 * (dn - ds);
        // |grad u|^2 from central differences; the term is normal and drops out
        // under projection, but it keeps tau(u) = Lap u + |grad u|^2 u literal.
        const Vec3 cx = ix * (de + dw);
        const Vec3 cy = iy * (dn + ds);
        const Vec3 tau = project_tangent(uc, lap + (norm_sq(cx) + norm_sq(cy)) * uc);
        if (f == nullptr) {
            out[c] = tau;
            return;
        }
        const double fc = f[c];
        const Vec3 cross_term = (0.5 * ix2) * ((f[e] - fc) * de + (fc - f[w]) * dw) +
                                (0.5 * iy2) * ((f[n] - fc) * dn + (fc - f[s]) * ds);
        out[c] = fc * tau + project_tangent(uc, cross_term);
    });
}

/// v = F + u x F for Landau-Lifshitz, v = F for the gradient flow.
inline void velocity_into(FlowKind kind, const SphereField& u, std::span<const Vec3> residual,
                          std::span<Vec3> out) {
    if (kind == FlowKind::gradient) {
        std::copy(residual.begin(), residual.end(), out.begin());
        return;
    }
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = residual[k] + cross(u[k], residual[k]);
}

}  // namespace detail

/// tau(u) = Lap u + |grad u|^2 u, projected onto T_u S^2.
inline TangentField tension(const SphereField& u) {
    TangentField t(u.grid());
    detail::residual_into(u, nullptr, t.values);
    return t;
}

/// f-harmonic defect alpha = f tau(u) + grad f . grad u; zero iff u is
/// discretely f-harmonic.
inline TangentField ps_residual(const SphereField& u, const Coupling& c) {
    TangentField t(u.grid());
    detail::residual_into(u, c.values().data(), t.values);
    return t;
}

/// Literal pointwise form f tau(u) + f_x u_x + f_y u_y using the coupling's
/// stored node gradient and central differences. Agrees with ps_residual to
/// O(h^2) for smooth data; used to validate the coupling gradient.
inline TangentField ps_residual_pointwise(const SphereField& u, const Coupling& c) {
    TangentField t = tension(u);
    const FieldGradient d = grad(u);
    for (std::size_t k = 0; k < t.size(); ++k) {
        const Vec2& gf = c.gradient(k);
        t[k] = c.value(k) * t[k] + project_tangent(u[k], gf.x * d.ux[k] + gf.y * d.uy[k]);
    }
    return t;
}

/// Landau-Lifshitz velocity F + u x F; |v|^2 = 2 |F|^2 node by node.
inline TangentField ll_velocity(const SphereField& u, const Coupling& c) {
    TangentField f = ps_residual(u, c);
    TangentField v(u.grid());
    detail::velocity_into(FlowKind::landau_lifshitz, u, f.values, v.values);
    return v;
}

/// Gradient-flow velocity F.
inline TangentField gradient_velocity(const SphereField& u, const Coupling& c) { return ps_residual(u, c); }

inline TangentField flow_velocity(FlowKind kind, const SphereField& u, const Coupling& c) {
    return kind == FlowKind::gradient ? gradient_velocity(u, c) : ll_velocity(u, c);
}

}  // namespace fharm
