#include "mlab/field.hpp"

#include <algorithm>
#include <cmath>

namespace mlab {

double g_scalar(double u, double p) {
    if (u == 0.0) return 0.0;
    if (p == 3.0) return u * u * u;  // fast path for the default exponent
    return u * std::pow(std::abs(u), p - 1.0);
}

GridFunction source(const GridFunction& u, const ModelParams& params) {
    GridFunction out(u.n_interior());
    const int n = u.n_interior();
    const double p = params.p;
    for (int i = 1; i <= n; ++i) out[i] = g_scalar(u[i], p);
    return out;
}

GridFunction discrete_laplacian(const GridFunction& u) {
    const int n = u.n_interior();
    GridFunction out(n);
    const double idx2 = 1.0 / (u.dx() * u.dx());
    for (int i = 1; i <= n; ++i)
        out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * idx2;
    return out;
}

double lp_norm(const GridFunction& u, double q) {
    if (!(q >= 1.0)) fail("RangeError", "lp_norm requires q >= 1");
    const int n = u.n_interior();
    const double dx = u.dx();
    double s = 0.0;
    for (int i = 1; i <= n; ++i) s += std::pow(std::abs(u[i]), q);
    return std::pow(s * dx, 1.0 / q);
}

double energy(const GridFunction& u, const ModelParams& params) {
    const int n = u.n_interior();
    const double dx = u.dx();
    const double pp1 = params.p + 1.0;
    double grad = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double d = (u[i + 1] - u[i]) / dx;
        grad += d * d;
    }
    double pot = 0.0;
    for (int i = 1; i <= n; ++i) pot += std::pow(std::abs(u[i]), pp1);
    return 0.5 * grad * dx - pot * dx / pp1;
}

double heat_kernel(double t, double x, double y, int images) {
    if (!(t > 0.0)) fail("RangeError", "heat_kernel requires t > 0");
    const double c = 1.0 / std::sqrt(4.0 * M_PI * t);
    const double i4t = 1.0 / (4.0 * t);
    double s = 0.0;
    for (int n = -images; n <= images; ++n) {
        const double a = 2.0 * n + y - x;
        const double b = 2.0 * n + y + x;
        s += std::exp(-a * a * i4t) - std::exp(-b * b * i4t);
    }
    return c * s;
}

double l2_inner(const GridFunction& u, const GridFunction& v) {
    if (u.n_interior() != v.n_interior())
        fail("GridMismatch", "l2_inner requires matching grids");
    const int n = u.n_interior();
    double s = 0.0;
    for (int i = 1; i <= n; ++i) s += u[i] * v[i];
    return s * u.dx();
}

GridFunction resample_linear(const std::vector<std::pair<double, double>>& samples,
                             int n_interior) {
    if (samples.size() < 2) fail("FormatError", "need at least two (x,value) samples");
    for (size_t k = 1; k < samples.size(); ++k)
        if (!(samples[k].first > samples[k - 1].first))
            fail("FormatError", "sample x-coordinates must be strictly increasing");
    GridFunction u(n_interior);
    size_t k = 0;
    for (int i = 1; i <= n_interior; ++i) {
        const double xi = u.x(i);
        if (xi <= samples.front().first) {
            u[i] = samples.front().second;
            continue;
        }
        if (xi >= samples.back().first) {
            u[i] = samples.back().second;
            continue;
        }
        while (k + 2 < samples.size() && samples[k + 1].first < xi) ++k;
        const auto& [x0, v0] = samples[k];
        const auto& [x1, v1] = samples[k + 1];
        u[i] = v0 + (v1 - v0) * (xi - x0) / (x1 - x0);
    }
    return u;
}

}  // namespace mlab
