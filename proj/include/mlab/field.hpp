// Elementary functionals and kernels on Dirichlet grid functions.
#pragma once

#include "mlab/types.hpp"

namespace mlab {

// Pointwise source g(u) = u|u|^{p-1}.
double g_scalar(double u, double p);

// g applied nodewise; endpoints stay 0.
GridFunction source(const GridFunction& u, const ModelParams& params);

// Second difference (u_{i-1} - 2u_i + u_{i+1})/dx^2 on interior nodes, 0 at endpoints.
GridFunction discrete_laplacian(const GridFunction& u);

// (sum |u_i|^q dx)^{1/q}; trapezoidal weights degenerate to the interior sum
// because the endpoints vanish.
double lp_norm(const GridFunction& u, double q);

// Discrete potential: sum_i 0.5*((u_{i+1}-u_i)/dx)^2 dx - sum_i |u_i|^{p+1} dx/(p+1).
double energy(const GridFunction& u, const ModelParams& params);

// Dirichlet heat kernel on [0,1] by the image sum, truncated at |n| <= images.
double heat_kernel(double t, double x, double y, int images);

// sum u_i v_i dx over interior nodes.
double l2_inner(const GridFunction& u, const GridFunction& v);

// Linear interpolation of (x, value) samples onto an n_interior grid,
// forcing Dirichlet endpoints. Samples must cover [0,1] monotonically in x.
GridFunction resample_linear(const std::vector<std::pair<double, double>>& samples,
                             int n_interior);

}  // namespace mlab
