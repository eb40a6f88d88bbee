#pragma once

/// @file cutoff.hpp
/// @brief Compactly supported planar vector fields used to vary the domain.
///
/// A CutoffField is X = eta(s) sigma(t) d, where (s, t) are coordinates of the
/// periodic displacement from the center along d and along its left normal n.
/// eta is the piecewise-linear plateau (1 on |s| <= b', linear ramps to 0 at
/// |s| = b); sigma is a C^2 quintic bump (1 on |t| <= delta, 0 on |t| >= 2 delta).
///
/// Any type satisfying PlanarVectorField can be fed to the variation diagnostics.

#include <cmath>
#include <concepts>
#include <stdexcept>

#include "fharmonic/grid.hpp"
#include "fharmonic/vec.hpp"

namespace fharm {

/// Value, divergence and Jacobian (jac.m[a][b] = dX_a/dx_b) of a vector field at a point.
struct VectorFieldSample {
    Vec2 value;
    double divergence = 0.0;
    Mat2 jacobian;
};

template <class F>
concept PlanarVectorField = requires(const F& f, const Point2& p) {
    { f.eval(p) } -> std::same_as<VectorFieldSample>;
};

/// Spatially constant field; generates translations.
struct ConstantVectorField {
    Vec2 value;
    VectorFieldSample eval(const Point2&) const { return {value, 0.0, Mat2{}}; }
};

struct CutoffParams {
    Point2 center;
    double a = 0.1;
    double b_inner = 0.15;  ///< b'
    double b_outer = 0.2;   ///< b
    double delta = 0.05;
    Vec2 direction{1.0, 0.0};
};

namespace detail {

/// 1 on |t| <= b', (b - |t|)/(b - b') on the ramps, 0 beyond b.
inline double plateau(double t, double bi, double bo) {
    const double at = std::abs(t);
    if (at <= bi) return 1.0;
    if (at >= bo) return 0.0;
    return (bo - at) / (bo - bi);
}

/// One-sided derivatives agree away from the kinks at +-b', +-b; at a kink
/// the mean of the two one-sided slopes is returned.
inline double plateau_slope(double t, double bi, double bo) {
    const double at = std::abs(t);
    const double ramp = 1.0 / (bo - bi);
    double s;
    if (at < bi || at > bo) {
        s = 0.0;
    } else if (at == bi || at == bo) {
        s = -0.5 * ramp;
    } else {
        s = -ramp;
    }
    return t < 0.0 ? -s : s;
}

inline double smoothstep5(double s) { return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s); }
inline double smoothstep5_slope(double s) { return 30.0 * s * s * (1.0 - s) * (1.0 - s); }

inline double bump(double t, double delta) {
    const double at = std::abs(t);
    if (at <= delta) return 1.0;
    if (at >= 2.0 * delta) return 0.0;
    return 1.0 - smoothstep5((at - delta) / delta);
}

inline double bump_slope(double t, double delta) {
    const double at = std::abs(t);
    if (at <= delta || at >= 2.0 * delta) return 0.0;
    const double s = -smoothstep5_slope((at - delta) / delta) / delta;
    return t < 0.0 ? -s : s;
}

}  // namespace detail

class CutoffField {
public:
    CutoffField(const Grid& grid, const CutoffParams& p) : lx_(grid.lx()), ly_(grid.ly()), p_(p) {
        if (!(0.0 < p.a && p.a < p.b_inner && p.b_inner < p.b_outer)) {
            throw std::invalid_argument("cutoff: require 0 < a < b' < b");
        }
        if (!(p.delta > 0.0)) throw std::invalid_argument("cutoff: delta must be positive");
        const double len = norm(p.direction);
        if (!(len > 0.0)) throw std::invalid_argument("cutoff: direction must be nonzero");
        d_ = (1.0 / len) * p.direction;
        // Support must fit in one fundamental cell so periodic images do not overlap.
        const double reach = std::hypot(p.b_outer, 2.0 * p.delta);
        if (!(reach < 0.5 * std::min(grid.lx(), grid.ly()))) {
            throw std::invalid_argument("cutoff: support does not fit inside the torus");
        }
    }

    const CutoffParams& params() const { return p_; }
    Vec2 direction() const { return d_; }

    VectorFieldSample eval(const Point2& x) const {
        const Vec2 r{periodic_offset(x.x - p_.center.x, lx_), periodic_offset(x.y - p_.center.y, ly_)};
        const Vec2 n{-d_.y, d_.x};
        const double s = dot(r, d_);
        const double t = dot(r, n);
        const double eta = detail::plateau(s, p_.b_inner, p_.b_outer);
        const double sig = detail::bump(t, p_.delta);
        VectorFieldSample out;
        // sigma' vanishes wherever sigma does; eta' may not (outer kink), so only sigma gates.
        if (sig == 0.0) return out;
        const double deta = detail::plateau_slope(s, p_.b_inner, p_.b_outer);
        const double dsig = detail::bump_slope(t, p_.delta);
        out.value = (eta * sig) * d_;
        // grad(eta(s) sigma(t)) = eta' sigma d + eta sigma' n
        const Vec2 g = (deta * sig) * d_ + (eta * dsig) * n;
        out.jacobian.m[0][0] = d_.x * g.x;
        out.jacobian.m[0][1] = d_.x * g.y;
        out.jacobian.m[1][0] = d_.y * g.x;
        out.jacobian.m[1][1] = d_.y * g.y;
        out.divergence = deta * sig;
        return out;
    }

private:
    double lx_;
    double ly_;
    CutoffParams p_;
    Vec2 d_;
};

inline CutoffField make_cutoff(const Grid& grid, const CutoffParams& p) { return CutoffField(grid, p); }

template <PlanarVectorField F>
VectorFieldSample eval_cutoff(const F& field, const Point2& p) {
    return field.eval(p);
}

}  // namespace fharm
