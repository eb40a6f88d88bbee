#pragma once

/// @file grid.hpp
/// @brief Uniform periodic grid on a flat rectangular torus.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "fharmonic/vec.hpp"

namespace fharm {

/// Shortest periodic representative of d, in (-l/2, l/2].
inline double periodic_offset(double d, double l) { return d - l * std::ceil(d / l - 0.5); }

/// Flat torus [0, lx) x [0, ly) sampled at nx x ny nodes. Node (i, j) sits at
/// (i*hx, j*hy); storage is row-major with j as the row index.
class Grid {
public:
    static constexpr std::size_t min_nodes = 8;

    Grid(std::size_t nx, std::size_t ny, double lx, double ly) : nx_(nx), ny_(ny), lx_(lx), ly_(ly) {
        if (nx < min_nodes || ny < min_nodes) {
            throw std::invalid_argument("grid: node counts must be >= 8 (got " + std::to_string(nx) +
                                        " x " + std::to_string(ny) + ")");
        }
        if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
            throw std::invalid_argument("grid: side lengths must be positive and finite");
        }
        hx_ = lx / static_cast<double>(nx);
        hy_ = ly / static_cast<double>(ny);
    }

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    std::size_t size() const { return nx_ * ny_; }
    double lx() const { return lx_; }
    double ly() const { return ly_; }
    double hx() const { return hx_; }
    double hy() const { return hy_; }
    double cell_area() const { return hx_ * hy_; }
    double area() const { return lx_ * ly_; }
    double min_spacing() const { return hx_ < hy_ ? hx_ : hy_; }
    double max_spacing() const { return hx_ > hy_ ? hx_ : hy_; }

    /// Flat index with wrap-around in both directions.
    std::size_t index(long i, long j) const {
        const long nx = static_cast<long>(nx_);
        const long ny = static_cast<long>(ny_);
        i %= nx;
        j %= ny;
        if (i < 0) i += nx;
        if (j < 0) j += ny;
        return static_cast<std::size_t>(j) * nx_ + static_cast<std::size_t>(i);
    }

    std::size_t column(std::size_t k) const { return k % nx_; }
    std::size_t row(std::size_t k) const { return k / nx_; }

    Point2 point(std::size_t i, std::size_t j) const {
        return {static_cast<double>(i) * hx_, static_cast<double>(j) * hy_};
    }
    Point2 point(std::size_t k) const { return point(column(k), row(k)); }

    /// Shortest periodic displacement from a to b.
    Vec2 displacement(const Point2& a, const Point2& b) const {
        return {periodic_offset(b.x - a.x, lx_), periodic_offset(b.y - a.y, ly_)};
    }

    double distance(const Point2& a, const Point2& b) const { return norm(displacement(a, b)); }

    /// Canonical representative of p in [0, lx) x [0, ly).
    Point2 wrap(const Point2& p) const {
        double x = std::fmod(p.x, lx_);
        double y = std::fmod(p.y, ly_);
        if (x < 0.0) x += lx_;
        if (y < 0.0) y += ly_;
        if (x >= lx_) x -= lx_;
        if (y >= ly_) y -= ly_;
        return {x, y};
    }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.nx_ == b.nx_ && a.ny_ == b.ny_ && a.lx_ == b.lx_ && a.ly_ == b.ly_;
    }

private:
    std::size_t nx_;
    std::size_t ny_;
    double lx_;
    double ly_;
    double hx_ = 0.0;
    double hy_ = 0.0;
};

inline Grid make_grid(std::size_t nx, std::size_t ny, double lx, double ly) { return Grid(nx, ny, lx, ly); }

}  // namespace fharm
