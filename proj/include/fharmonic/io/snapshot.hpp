#pragma once

/// @file snapshot.hpp
/// @brief Field snapshots (binary and CSV) and energy-density heatmaps.
///
/// Binary layout, all little-endian:
///   8 bytes  magic "FHSNAP01"
///   u32      version (1)
///   u32      nx, ny
///   u32      reserved (0)
///   f64      lx, ly
///   f64      nx*ny triples (u_x, u_y, u_z), row-major with x fastest

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fharmonic/field.hpp"

namespace fharm::io {

inline constexpr std::array<char, 8> snapshot_magic{'F', 'H', 'S', 'N', 'A', 'P', '0', '1'};
inline constexpr std::uint32_t snapshot_version = 1;

namespace detail {

template <class U>
void put_le(std::vector<unsigned char>& buf, U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline void put_f64(std::vector<unsigned char>& buf, double x) { put_le(buf, std::bit_cast<std::uint64_t>(x)); }

template <class U>
U get_le(const unsigned char* p) {
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
    return v;
}

inline double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_le<std::uint64_t>(p)); }

inline constexpr std::size_t header_bytes = 8 + 4 * 4 + 2 * 8;

/// "%.17g": shortest fixed format that round-trips a double.
inline std::string fmt(double x) {
    char b[32];
    std::snprintf(b, sizeof b, "%.17g", x);
    return b;
}

}  // namespace detail

inline std::vector<unsigned char> encode_snapshot(const SphereField& u) {
    const Grid& g = u.grid();
    std::vector<unsigned char> buf(snapshot_magic.begin(), snapshot_magic.end());
    buf.reserve(detail::header_bytes + 24 * u.size());
    detail::put_le<std::uint32_t>(buf, snapshot_version);
    detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(g.nx()));
    detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(g.ny()));
    detail::put_le<std::uint32_t>(buf, 0);
    detail::put_f64(buf, g.lx());
    detail::put_f64(buf, g.ly());
    for (const Vec3& v : u.values()) {
        detail::put_f64(buf, v.x);
        detail::put_f64(buf, v.y);
        detail::put_f64(buf, v.z);
    }
    return buf;
}

inline SphereField decode_snapshot(const std::vector<unsigned char>& buf) {
    if (buf.size() < detail::header_bytes || !std::equal(snapshot_magic.begin(), snapshot_magic.end(), buf.begin())) {
        throw std::runtime_error("snapshot: bad magic");
    }
    const unsigned char* p = buf.data() + 8;
    const auto version = detail::get_le<std::uint32_t>(p);
    if (version != snapshot_version) throw std::runtime_error("snapshot: unsupported version " + std::to_string(version));
    const auto nx = detail::get_le<std::uint32_t>(p + 4);
    const auto ny = detail::get_le<std::uint32_t>(p + 8);
    const double lx = detail::get_f64(p + 16);
    const double ly = detail::get_f64(p + 24);
    const Grid g(nx, ny, lx, ly);
    if (buf.size() != detail::header_bytes + 24 * g.size()) throw std::runtime_error("snapshot: truncated payload");
    std::vector<Vec3> u(g.size());
    const unsigned char* q = buf.data() + detail::header_bytes;
    for (std::size_t k = 0; k < u.size(); ++k, q += 24) {
        u[k] = {detail::get_f64(q), detail::get_f64(q + 8), detail::get_f64(q + 16)};
    }
    return SphereField(g, std::move(u));
}

inline void write_snapshot(const std::filesystem::path& path, const SphereField& u) {
    const auto buf = encode_snapshot(u);
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::ios_base::failure("snapshot: cannot write '" + path.string() + "'");
}

inline SphereField read_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("snapshot: cannot open '" + path.string() + "'");
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_snapshot(buf);
}

/// CSV export: i,j,x,y,ux,uy,uz.
inline void write_snapshot_csv(const std::filesystem::path& path, const SphereField& u) {
    std::ofstream out(path);
    const Grid& g = u.grid();
    out << "i,j,x,y,ux,uy,uz\n";
    for (std::size_t k = 0; k < u.size(); ++k) {
        const Point2 p = g.point(k);
        out << g.column(k) << ',' << g.row(k) << ',' << detail::fmt(p.x) << ',' << detail::fmt(p.y) << ','
            << detail::fmt(u[k].x) << ',' << detail::fmt(u[k].y) << ',' << detail::fmt(u[k].z) << '\n';
    }
    if (!out) throw std::ios_base::failure("snapshot: cannot write '" + path.string() + "'");
}

/// ASCII PGM (P2) of node values scaled so the maximum maps to 255. Row 0 of
/// the image is the top edge (largest y).
inline void write_pgm(const std::filesystem::path& path, const Grid& g, std::span<const double> values) {
    std::ofstream out(path);
    const double vmax = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
    out << "P2\n" << g.nx() << ' ' << g.ny() << "\n255\n";
    for (std::size_t r = 0; r < g.ny(); ++r) {
        const std::size_t j = g.ny() - 1 - r;
        for (std::size_t i = 0; i < g.nx(); ++i) {
            const double v = values[j * g.nx() + i];
            const long level = vmax > 0.0 ? std::lround(255.0 * std::max(v, 0.0) / vmax) : 0;
            out << level << (i + 1 == g.nx() ? '\n' : ' ');
        }
    }
    if (!out) throw std::ios_base::failure("heatmap: cannot write '" + path.string() + "'");
}

}  // namespace fharm::io
