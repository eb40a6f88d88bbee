#pragma once

/// @file ledger.hpp
/// @brief ledger.csv and report.txt writers.

#include <cmath>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "fharmonic/diagnostics.hpp"
#include "fharmonic/io/snapshot.hpp"

namespace fharm::io {

namespace detail {

inline std::string fmt_or_nan(double x) { return std::isnan(x) ? "nan" : fmt(x); }

}  // namespace detail

inline void write_ledger_header(std::ostream& out, std::size_t n_radii) {
    out << "t,E_f,v_norm_sq,ps_norm,max_density,argmax_x,argmax_y";
    for (std::size_t i = 1; i <= n_radii; ++i) out << ",local_E_r" << i;
    out << ",dist_to_crit\n";
}

inline void write_ledger_row(std::ostream& out, const LedgerRow& row) {
    using detail::fmt;
    out << fmt(row.t) << ',' << fmt(row.energy) << ',' << fmt(row.v_norm_sq) << ',' << fmt(row.ps_norm) << ','
        << fmt(row.max_density) << ',' << fmt(row.argmax.x) << ',' << fmt(row.argmax.y);
    for (double e : row.local_energy) out << ',' << fmt(e);
    out << ',' << detail::fmt_or_nan(row.dist_to_crit) << '\n';
}

inline void write_ledger(std::ostream& out, const DiagnosticsLedger& ledger) {
    write_ledger_header(out, ledger.radii.size());
    for (const auto& row : ledger.rows) write_ledger_row(out, row);
}

/// Ordered "key = value" lines.
class Report {
public:
    void add(std::string key, std::string value) { items_.emplace_back(std::move(key), std::move(value)); }
    void add(std::string key, double value) { add(std::move(key), detail::fmt_or_nan(value)); }
    void add(std::string key, std::size_t value) { add(std::move(key), std::to_string(value)); }
    void add(std::string key, bool value) { add(std::move(key), std::string(value ? "true" : "false")); }
    void add(std::string key, const char* value) { add(std::move(key), std::string(value)); }

    const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

    friend std::ostream& operator<<(std::ostream& out, const Report& r) {
        for (const auto& [k, v] : r.items_) out << k << " = " << v << '\n';
        return out;
    }

private:
    std::vector<std::pair<std::string, std::string>> items_;
};

inline void add_concentration(Report& rep, const ConcentrationReport& c) {
    rep.add("concentration.detected", c.detected);
    rep.add("concentration.threshold", c.threshold);
    rep.add("concentration.location_x", c.location.x);
    rep.add("concentration.location_y", c.location.y);
    rep.add("concentration.max_density", c.max_density);
    for (std::size_t i = 0; i < c.radii.size(); ++i) {
        const std::string idx = std::to_string(i + 1);
        rep.add("concentration.radius_" + idx, c.radii[i]);
        rep.add("concentration.local_E_r" + idx, c.profile[i]);
    }
    rep.add("concentration.limit_estimate", c.limit_estimate);
    if (c.everywhere_critical) {
        rep.add("concentration.critical_set", "everywhere critical");
    } else if (c.nearest) {
        rep.add("concentration.nearest_critical_kind", to_string(c.nearest->kind));
        rep.add("concentration.nearest_critical_x", c.nearest->location.x);
        rep.add("concentration.nearest_critical_y", c.nearest->location.y);
        rep.add("concentration.dist_to_crit", c.nearest->distance);
    }
    rep.add("concentration.drift_samples", c.drift.size());
}

/// Drift trajectory as CSV: t,x,y,dist_to_crit.
inline void write_drift(std::ostream& out, const ConcentrationReport& c) {
    out << "t,x,y,dist_to_crit\n";
    for (const auto& d : c.drift) {
        out << detail::fmt(d.t) << ',' << detail::fmt(d.location.x) << ',' << detail::fmt(d.location.y) << ','
            << detail::fmt_or_nan(d.dist_to_crit) << '\n';
    }
}

}  // namespace fharm::io
