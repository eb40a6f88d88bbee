#pragma once

/// @file coupling.hpp
/// @brief The positive coupling function f, its gradient, and its critical set.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fharmonic/grid.hpp"
#include "fharmonic/vec.hpp"

namespace fharm {

enum class CouplingKind { constant, cosine, sampled };

inline const char* to_string(CouplingKind k) {
    switch (k) {
        case CouplingKind::constant: return "constant";
        case CouplingKind::cosine: return "cosine";
        case CouplingKind::sampled: return "sampled";
    }
    return "?";
}

/// f = base + amplitude_x cos(2 pi mode_x x / lx) + amplitude_y cos(2 pi mode_y y / ly).
/// For kind == constant only `base` is used; for kind == sampled only `samples`.
struct CouplingParams {
    CouplingKind kind = CouplingKind::constant;
    double base = 1.0;
    double amplitude_x = 0.0;
    double amplitude_y = 0.0;
    int mode_x = 1;
    int mode_y = 1;
    std::vector<double> samples;
};

/// Coupling function sampled on a grid. Analytic kinds keep exact point
/// evaluation of f, its gradient and Hessian; sampled couplings carry node
/// values and a central-difference gradient.
class Coupling {
public:
    /// Sampled coupling with an explicitly supplied node gradient. No
    /// consistency check is made between `values` and `gradient`.
    static Coupling sampled(const Grid& grid, std::vector<double> values, std::vector<Vec2> gradient) {
        if (values.size() != grid.size() || gradient.size() != grid.size()) {
            throw std::invalid_argument("coupling: sample count does not match grid");
        }
        Coupling c(grid);
        c.params_.kind = CouplingKind::sampled;
        c.values_ = std::move(values);
        c.grad_ = std::move(gradient);
        c.validate_samples();
        return c;
    }

    friend Coupling make_coupling(const Grid& grid, const CouplingParams& params);

    CouplingKind kind() const { return params_.kind; }
    const CouplingParams& params() const { return params_; }
    const Grid& grid() const { return grid_; }
    bool is_analytic() const { return params_.kind != CouplingKind::sampled; }

    std::span<const double> values() const { return values_; }
    std::span<const Vec2> gradient() const { return grad_; }
    double value(std::size_t k) const { return values_[k]; }
    const Vec2& gradient(std::size_t k) const { return grad_[k]; }

    double min_value() const { return *std::min_element(values_.begin(), values_.end()); }
    double max_value() const { return *std::max_element(values_.begin(), values_.end()); }

    /// Point evaluation. Sampled couplings use the nearest node.
    double eval(const Point2& p) const {
        if (params_.kind == CouplingKind::sampled) return values_[nearest_node(p)];
        return params_.base + params_.amplitude_x * std::cos(kx() * p.x) +
               params_.amplitude_y * std::cos(ky() * p.y);
    }

    Vec2 eval_gradient(const Point2& p) const {
        if (params_.kind == CouplingKind::sampled) return grad_[nearest_node(p)];
        return {-params_.amplitude_x * kx() * std::sin(kx() * p.x),
                -params_.amplitude_y * ky() * std::sin(ky() * p.y)};
    }

    /// Hessian of an analytic coupling (zero for sampled ones).
    Mat2 eval_hessian(const Point2& p) const {
        Mat2 h;
        if (params_.kind == CouplingKind::sampled) return h;
        h.m[0][0] = -params_.amplitude_x * kx() * kx() * std::cos(kx() * p.x);
        h.m[1][1] = -params_.amplitude_y * ky() * ky() * std::cos(ky() * p.y);
        return h;
    }

private:
    explicit Coupling(const Grid& grid) : grid_(grid) {}

    double kx() const { return 2.0 * std::numbers::pi * params_.mode_x / grid_.lx(); }
    double ky() const { return 2.0 * std::numbers::pi * params_.mode_y / grid_.ly(); }

    std::size_t nearest_node(const Point2& p) const {
        const Point2 q = grid_.wrap(p);
        return grid_.index(std::lround(q.x / grid_.hx()), std::lround(q.y / grid_.hy()));
    }

    void validate_samples() const {
        for (std::size_t k = 0; k < values_.size(); ++k) {
            if (!(values_[k] > 0.0) || !std::isfinite(values_[k])) {
                throw std::invalid_argument("coupling: f must be positive at every node (node " +
                                            std::to_string(k) + " has " + std::to_string(values_[k]) + ")");
            }
        }
    }

    Grid grid_;
    CouplingParams params_;
    std::vector<double> values_;
    std::vector<Vec2> grad_;
};

/// Central-difference gradient of node samples on the periodic grid.
inline std::vector<Vec2> central_gradient(const Grid& grid, std::span<const double> f) {
    std::vector<Vec2> g(grid.size());
    const double ix = 0.5 / grid.hx();
    const double iy = 0.5 / grid.hy();
    for (std::size_t j = 0; j < grid.ny(); ++j) {
        for (std::size_t i = 0; i < grid.nx(); ++i) {
            const long li = static_cast<long>(i);
            const long lj = static_cast<long>(j);
            g[grid.index(li, lj)] = {(f[grid.index(li + 1, lj)] - f[grid.index(li - 1, lj)]) * ix,
                                     (f[grid.index(li, lj + 1)] - f[grid.index(li, lj - 1)]) * iy};
        }
    }
    return g;
}

inline Coupling make_coupling(const Grid& grid, const CouplingParams& params) {
    Coupling c(grid);
    c.params_ = params;
    switch (params.kind) {
        case CouplingKind::constant: {
            if (!(params.base > 0.0) || !std::isfinite(params.base)) {
                throw std::invalid_argument("coupling: constant value must be positive");
            }
            c.params_.amplitude_x = 0.0;
            c.params_.amplitude_y = 0.0;
            c.values_.assign(grid.size(), params.base);
            c.grad_.assign(grid.size(), Vec2{});
            break;
        }
        case CouplingKind::cosine: {
            if (params.mode_x < 1 || params.mode_y < 1) {
                throw std::invalid_argument("coupling: cosine modes must be >= 1");
            }
            const double fmin = params.base - std::abs(params.amplitude_x) - std::abs(params.amplitude_y);
            if (!(fmin > 0.0)) {
                throw std::invalid_argument("coupling: cosine parameters violate positivity (min f = " +
                                            std::to_string(fmin) + ")");
            }
            c.values_.resize(grid.size());
            c.grad_.resize(grid.size());
            for (std::size_t k = 0; k < grid.size(); ++k) {
                const Point2 p = grid.point(k);
                c.values_[k] = c.eval(p);
                c.grad_[k] = c.eval_gradient(p);
            }
            break;
        }
        case CouplingKind::sampled: {
            if (params.samples.size() != grid.size()) {
                throw std::invalid_argument("coupling: expected " + std::to_string(grid.size()) +
                                            " samples, got " + std::to_string(params.samples.size()));
            }
            c.values_ = params.samples;
            c.validate_samples();
            c.grad_ = central_gradient(grid, c.values_);
            break;
        }
    }
    c.params_.samples.clear();
    return c;
}

// ---------------------------------------------------------------------------
// Critical points

enum class CriticalKind { minimum, maximum, saddle };

inline const char* to_string(CriticalKind k) {
    switch (k) {
        case CriticalKind::minimum: return "min";
        case CriticalKind::maximum: return "max";
        case CriticalKind::saddle: return "saddle";
    }
    return "?";
}

struct CriticalPoint {
    Point2 location;
    CriticalKind kind;
    double value;
};

/// A line of critical points {x = coordinate} (axis 0) or {y = coordinate} (axis 1).
/// `kind` classifies f across the line.
struct CriticalLine {
    int axis;
    double coordinate;
    CriticalKind kind;
};

struct NearestCritical {
    double distance;
    Point2 location;
    CriticalKind kind;
};

struct CriticalSet {
    bool everywhere = false;
    std::vector<CriticalPoint> points;
    std::vector<CriticalLine> lines;

    /// Nearest critical location to p under the periodic metric; empty when
    /// every point is critical.
    std::optional<NearestCritical> nearest(const Grid& grid, const Point2& p) const {
        if (everywhere) return std::nullopt;
        std::optional<NearestCritical> best;
        for (const auto& c : points) {
            const double d = grid.distance(p, c.location);
            if (!best || d < best->distance) best = NearestCritical{d, c.location, c.kind};
        }
        for (const auto& l : lines) {
            const double d = l.axis == 0 ? std::abs(periodic_offset(l.coordinate - p.x, grid.lx()))
                                         : std::abs(periodic_offset(l.coordinate - p.y, grid.ly()));
            const Point2 foot = l.axis == 0 ? Point2{l.coordinate, p.y} : Point2{p.x, l.coordinate};
            if (!best || d < best->distance) best = NearestCritical{d, foot, l.kind};
        }
        return best;
    }

    /// First critical point of the requested kind, if any.
    std::optional<CriticalPoint> first(CriticalKind kind) const {
        for (const auto& c : points) {
            if (c.kind == kind) return c;
        }
        return std::nullopt;
    }
};

namespace detail {

inline CriticalKind classify(double fxx, double fyy) {
    if (fxx > 0.0 && fyy > 0.0) return CriticalKind::minimum;
    if (fxx < 0.0 && fyy < 0.0) return CriticalKind::maximum;
    return CriticalKind::saddle;
}

/// Zeros of sin(2 pi m t / l) on [0, l): t_k = k l / (2m).
inline std::vector<double> sine_zeros(int mode, double l) {
    std::vector<double> z;
    for (int k = 0; k < 2 * mode; ++k) z.push_back(k * l / (2.0 * mode));
    return z;
}

inline CriticalSet analytic_critical_points(const Coupling& c) {
    const auto& p = c.params();
    const Grid& g = c.grid();
    CriticalSet out;
    const bool flat_x = p.kind == CouplingKind::constant || p.amplitude_x == 0.0;
    const bool flat_y = p.kind == CouplingKind::constant || p.amplitude_y == 0.0;
    if (flat_x && flat_y) {
        out.everywhere = true;
        return out;
    }
    const auto xs = sine_zeros(p.mode_x, g.lx());
    const auto ys = sine_zeros(p.mode_y, g.ly());
    if (flat_y) {
        for (double x : xs) {
            const double fxx = c.eval_hessian({x, 0.0}).m[0][0];
            out.lines.push_back({0, x, fxx > 0.0 ? CriticalKind::minimum : CriticalKind::maximum});
        }
        return out;
    }
    if (flat_x) {
        for (double y : ys) {
            const double fyy = c.eval_hessian({0.0, y}).m[1][1];
            out.lines.push_back({1, y, fyy > 0.0 ? CriticalKind::minimum : CriticalKind::maximum});
        }
        return out;
    }
    for (double y : ys) {
        for (double x : xs) {
            const Point2 q{x, y};
            const Mat2 h = c.eval_hessian(q);
            out.points.push_back({q, classify(h.m[0][0], h.m[1][1]), c.eval(q)});
        }
    }
    return out;
}

/// Vertex offset of the parabola through (-h, fm), (0, f0), (h, fp), clamped
/// to half a cell.
inline double parabola_vertex(double fm, double f0, double fp, double h) {
    const double curv = fp - 2.0 * f0 + fm;
    if (curv == 0.0) return 0.0;
    const double t = 0.5 * (fm - fp) / curv;
    return std::clamp(t, -0.5, 0.5) * h;
}

inline CriticalSet sampled_critical_points(const Coupling& c) {
    const Grid& g = c.grid();
    const auto f = c.values();
    CriticalSet out;
    const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
    if (*lo == *hi) {
        out.everywhere = true;
        return out;
    }
    for (std::size_t j = 0; j < g.ny(); ++j) {
        for (std::size_t i = 0; i < g.nx(); ++i) {
            const long li = static_cast<long>(i), lj = static_cast<long>(j);
            const double f0 = f[g.index(li, lj)];
            const double fxm = f[g.index(li - 1, lj)], fxp = f[g.index(li + 1, lj)];
            const double fym = f[g.index(li, lj - 1)], fyp = f[g.index(li, lj + 1)];
            // Discrete gradient changes sign (or vanishes) across the node in both axes;
            // the strict inequality on the right avoids reporting both nodes of a flat pair.
            const bool cx = (fxp - f0) * (f0 - fxm) <= 0.0 && !(fxp == f0 && f0 == fxm) && fxm != f0;
            const bool cy = (fyp - f0) * (f0 - fym) <= 0.0 && !(fyp == f0 && f0 == fym) && fym != f0;
            if (!cx || !cy) continue;
            const double fxx = fxp - 2.0 * f0 + fxm;
            const double fyy = fyp - 2.0 * f0 + fym;
            const Point2 q = g.wrap({g.point(i, j).x + parabola_vertex(fxm, f0, fxp, g.hx()),
                                     g.point(i, j).y + parabola_vertex(fym, f0, fyp, g.hy())});
            out.points.push_back({q, classify(fxx, fyy), f0});
        }
    }
    return out;
}

}  // namespace detail

/// Critical set of f. Constant couplings return the `everywhere` sentinel;
/// couplings independent of one coordinate return critical lines.
inline CriticalSet critical_points(const Coupling& c) {
    return c.is_analytic() ? detail::analytic_critical_points(c) : detail::sampled_critical_points(c);
}

}  // namespace fharm
