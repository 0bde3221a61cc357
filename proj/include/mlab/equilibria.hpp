// The positive saddle z, its scaled alternating copies, and the unstable
// direction / heteroclinic orbit used by the instanton construction.
#pragma once

#include <optional>

#include "mlab/path.hpp"
#include "mlab/types.hpp"

namespace mlab {

struct Equilibrium {
    GridFunction profile;        // solves the discrete steady-state equations
    int index = 0;               // 0 = origin, +-1 = +-z, ...
    double sup_norm = 0.0;       // grid-bias-corrected (Richardson across N and 2N+1)
    double energy = 0.0;         // likewise
    double residual = 0.0;       // sup |L_h w + g(w)| on interior nodes
    std::optional<double> unstable_eigenvalue;
    std::optional<GridFunction> unstable_direction;  // L2-normalized, <e, profile> >= 0
};

// sup over interior nodes of |discrete_laplacian(w) + g(w)|.
double equilibrium_residual(const GridFunction& w, const ModelParams& params);

// The positive saddle: shooting on w'(0) with bisection until the first zero
// lands on x = 1, then Newton polish of the discrete system. sup_norm and
// energy fields are Richardson-extrapolated across the N and 2N+1 grids.
// Includes the principal eigenpair of the linearization.
Equilibrium compute_z(const ModelParams& params, double tol = 1e-8);

// The n-th alternating scaled copy. Teeth are re-solved at tooth resolution so
// the glued profile stays a discrete equilibrium; requires (N+1) % |n| == 0.
Equilibrium make_zn(const Equilibrium& z, int n, const ModelParams& params,
                    double tol = 1e-8);

// Principal (largest) eigenpair of L_h + diag(p|w|^{p-1}) by shifted inverse
// iteration; eigenvector is L2-normalized with <e, w> >= 0.
std::pair<double, GridFunction> unstable_eigenpair(const Equilibrium& w,
                                                   const ModelParams& params);

// Forward orbit from z - delta0*e (sup-normalized offset), integrated until
// sup-norm <= delta0, recorded every step. Throws Error("WrongBasin") if the
// orbit explodes instead of decaying.
Path heteroclinic_orbit(const Equilibrium& z, double delta0, const ModelParams& params);

}  // namespace mlab
