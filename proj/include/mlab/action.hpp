// Discretized path-space rate functional, its energy lower bound, the
// instanton construction and the barrier estimate.
#pragma once

#include "mlab/equilibria.hpp"
#include "mlab/path.hpp"
#include "mlab/types.hpp"

namespace mlab {

struct ActionReport {
    double action = 0.0;
    double lower_bound = 0.0;            // 2 * max_k (S_h(phi_k) - S_h(phi_0))
    std::vector<double> per_segment;
};

// Midpoint-in-time, nodewise-in-space quadrature of
// 0.5 * int int |d_t phi - L phi - g(phi)|^2.
ActionReport path_action(const Path& phi, const ModelParams& params);

// True iff action >= lower_bound - tol_A with tol_A = 1e-2 * max(1, |lower_bound|).
bool action_lower_bound_check(const Path& phi, const ModelParams& params);

struct InstantonOptions {
    double delta0_rel = 1e-3;   // endpoint truncation, relative to ||z||_inf
    double thin_step_rel = 0.0; // middle thinning threshold, relative to ||z||_inf; 0 = keep all
};

// Time-reversed heteroclinic from (near) 0 to (near) z. With a nonzero
// thinning threshold the middle of the path is subsampled while frames near
// both endpoints are kept, so the time grid stays finest where motion is slow.
Path build_instanton(const Equilibrium& z, double delta0, const ModelParams& params,
                     double thin_step = 0.0);

// Instanton, then a unit-sup-speed linear interpolation z -> (1+h)z, then the
// deterministic flow from (1+h)z recorded until the energy turns negative.
Path build_escape_path(const Equilibrium& z, double h, const ModelParams& params);

// 2 * S_h(z) via compute_z (S_h(0) = 0 exactly).
double estimate_delta(const ModelParams& params);

}  // namespace mlab
