#pragma once

/// @file field.hpp
/// @brief Unit-vector fields on the periodic grid and their initial-data generators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "fharmonic/grid.hpp"
#include "fharmonic/vec.hpp"

namespace fharm {

/// A map from the grid nodes into S^2. Every constructor in this header
/// returns fields with |u| = 1 to rounding.
class SphereField {
public:
    SphereField(const Grid& grid, std::vector<Vec3> values) : grid_(grid), u_(std::move(values)) {
        if (u_.size() != grid_.size()) throw std::invalid_argument("field: value count does not match grid");
    }

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return u_.size(); }

    const Vec3& operator[](std::size_t k) const { return u_[k]; }
    Vec3& operator[](std::size_t k) { return u_[k]; }
    const Vec3& at(long i, long j) const { return u_[grid_.index(i, j)]; }

    std::span<const Vec3> values() const { return u_; }
    std::span<Vec3> values() { return u_; }

    /// max over nodes of ||u| - 1|.
    double max_norm_deviation() const {
        double m = 0.0;
        for (const auto& v : u_) m = std::max(m, std::abs(norm(v) - 1.0));
        return m;
    }

    void renormalize() {
        for (auto& v : u_) v = normalized(v);
    }

    friend bool operator==(const SphereField& a, const SphereField& b) {
        return a.grid_ == b.grid_ && a.u_ == b.u_;
    }

private:
    Grid grid_;
    std::vector<Vec3> u_;
};

inline SphereField constant_field(const Grid& grid, const Vec3& v) {
    if (!(norm(v) > 0.0)) throw std::invalid_argument("field: constant direction must be nonzero");
    return SphereField(grid, std::vector<Vec3>(grid.size(), normalized(v)));
}

/// u = (sin k s, 0, cos k s) with s the coordinate along `axis` (0 = x, 1 = y) and
/// k = 2 pi winding / l: a closed geodesic traversed `winding` times.
inline SphereField great_circle_field(const Grid& grid, int axis = 0, int winding = 1) {
    std::vector<Vec3> u(grid.size());
    const double l = axis == 0 ? grid.lx() : grid.ly();
    const double k = 2.0 * std::numbers::pi * winding / l;
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const Point2 p = grid.point(n);
        const double s = axis == 0 ? p.x : p.y;
        u[n] = {std::sin(k * s), 0.0, std::cos(k * s)};
    }
    return SphereField(grid, std::move(u));
}

struct BubbleParams {
    Point2 center;
    double scale = 0.05;                 ///< lambda
    Vec3 background{0.0, 0.0, -1.0};     ///< value far from the center
};

namespace detail {

/// Rotation taking the south pole (0, 0, -1) to the unit vector v, applied to w.
inline Vec3 rotate_south_to(const Vec3& v, const Vec3& w) {
    const Vec3 s{0.0, 0.0, -1.0};
    if (v == s) return w;
    const double c = dot(s, v);
    if (c <= -1.0 + 1e-15) return {w.x, -w.y, -w.z};  // half turn about e_x
    const Vec3 k = cross(s, v);
    // Rodrigues with unnormalized axis: R w = c w + k x w + (k.w) k / (1 + c)
    return c * w + cross(k, w) + (dot(k, w) / (1.0 + c)) * k;
}

}  // namespace detail

/// Degree-one bubble: the inverse stereographic profile
///   m(a, b) = (2a, 2b, 1 - a^2 - b^2) / (1 + a^2 + b^2),  (a, b) = (x - p) / lambda,
/// glued to the background. The gluing scales the conformal coordinate near
/// the south pole by w(r) = (1 - r^2/R^2) c(r), R = min(lx, ly)/2, with c a C^2
/// taper from 1 at r = R/2 to 0 at r = R; beyond R the field equals `background`.
/// The factor (1 - r^2/R^2) cancels the leading tail of the profile, which keeps
/// the glued energy within a few percent of 8 pi for lambda << R.
inline SphereField bubble_field(const Grid& grid, const BubbleParams& b) {
    const double quarter = 0.25 * std::min(grid.lx(), grid.ly());
    if (!(b.scale > 0.0 && b.scale < quarter)) {
        throw std::invalid_argument("field: bubble scale must lie in (0, min(lx, ly)/4)");
    }
    if (std::abs(norm(b.background) - 1.0) > 1e-12) {
        throw std::invalid_argument("field: bubble background must be a unit vector");
    }
    const double r_out = 2.0 * quarter;
    const double r_in = quarter;
    std::vector<Vec3> u(grid.size());
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const Vec2 d = grid.displacement(b.center, grid.point(n));
        const double r2 = dot(d, d);
        if (r2 >= r_out * r_out) {
            u[n] = b.background;
            continue;
        }
        const double r = std::sqrt(r2);
        double w = 1.0 - r2 / (r_out * r_out);
        if (r > r_in) {
            const double s = (r - r_in) / (r_out - r_in);
            w *= 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
        }
        const double a = d.x / b.scale;
        const double c = d.y / b.scale;
        const double z2 = a * a + c * c;
        const double den = w * w + z2;
        const Vec3 m{2.0 * a * w / den, 2.0 * c * w / den, (w * w - z2) / den};
        u[n] = normalized(detail::rotate_south_to(b.background, m));
    }
    return SphereField(grid, std::move(u));
}

namespace detail {

/// Uniform double in [0, 1) from the top 53 bits; platform independent.
inline double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Orthonormal pair spanning the tangent plane at the unit vector u.
inline void tangent_basis(const Vec3& u, Vec3& e1, Vec3& e2) {
    const double ax = std::abs(u.x), ay = std::abs(u.y), az = std::abs(u.z);
    Vec3 a{1.0, 0.0, 0.0};
    if (ay <= ax && ay <= az) a = {0.0, 1.0, 0.0};
    else if (az <= ax && az <= ay) a = {0.0, 0.0, 1.0};
    e1 = normalized(project_tangent(u, a));
    e2 = cross(u, e1);
}

}  // namespace detail

/// Adds an independent random tangent vector of length <= amplitude at every
/// node, then renormalizes. The realization depends only on `seed`.
inline SphereField perturb(const SphereField& field, double amplitude, std::uint64_t seed) {
    if (!(amplitude >= 0.0)) throw std::invalid_argument("field: perturbation amplitude must be >= 0");
    if (amplitude == 0.0) return field;
    std::mt19937_64 rng(seed);
    SphereField out = field;
    for (std::size_t n = 0; n < out.size(); ++n) {
        const double radius = amplitude * detail::unit_uniform(rng);
        const double angle = 2.0 * std::numbers::pi * detail::unit_uniform(rng);
        Vec3 e1, e2;
        detail::tangent_basis(out[n], e1, e2);
        out[n] = normalized(out[n] + (radius * std::cos(angle)) * e1 + (radius * std::sin(angle)) * e2);
    }
    return out;
}

/// Applies the rotation matrix r (row-major) to every node.
inline SphereField rotate(const SphereField& field, const double (&r)[3][3]) {
    SphereField out = field;
    for (auto& v : out.values()) {
        const Vec3 w = v;
        v = {r[0][0] * w.x + r[0][1] * w.y + r[0][2] * w.z, r[1][0] * w.x + r[1][1] * w.y + r[1][2] * w.z,
             r[2][0] * w.x + r[2][1] * w.y + r[2][2] * w.z};
    }
    return out;
}

}  // namespace fharm
