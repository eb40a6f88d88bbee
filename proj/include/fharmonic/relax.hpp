#pragma once

/// @file relax.hpp
/// @brief Discrete f-harmonic maps by running the gradient flow to stationarity.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "fharmonic/flow.hpp"

namespace fharm {

struct RelaxResult {
    SphereField field;             ///< converged field, or the best iterate when not converged
    std::vector<double> ps_history;
    bool converged = false;
    std::size_t steps = 0;
};

/// Gradient flow u <- P(u + dt F) until ||F||_L2 < tol or max_steps.
inline RelaxResult relax(const SphereField& initial, const Coupling& c, double tol, std::size_t max_steps,
                         double cfl_safety = 0.9) {
    if (!(tol > 0.0)) throw std::invalid_argument("relax: tolerance must be positive");
    const Grid& g = initial.grid();
    const double dt = cfl_dt(g, c, cfl_safety);
    RelaxResult out{initial, {}, false, 0};
    SphereField u = initial;
    std::vector<Vec3> f(g.size());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0;; ++n) {
        detail::residual_into(u, c.values().data(), f);
        const double r = std::sqrt(l2_inner(f, f, g.cell_area()));
        if (!std::isfinite(r)) throw BlowupError(BlowupError::Reason::non_finite, 0, "relax: residual non-finite");
        out.ps_history.push_back(r);
        if (r < best) {
            best = r;
            out.field = u;
            out.steps = n;
        }
        if (r < tol) {
            out.converged = true;
            break;
        }
        if (n >= max_steps) break;
        detail::project_update(u, f, dt);
    }
    return out;
}

}  // namespace fharm
