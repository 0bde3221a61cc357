// Test-only oracles, independent of the library's solvers: the time-map
// quadrature for the saddle profile, a Sturm-sequence eigensolver for small
// symmetric tridiagonal matrices, and plain Simpson integration.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

// Composite Simpson with doubling until the result settles.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      double tol = 1e-12) {
    double prev = 0.0;
    for (int k = 8; k <= 22; ++k) {
        const int n = 1 << k;  // panels (even)
        const double h = (b - a) / n;
        double s = f(a) + f(b);
        for (int i = 1; i < n; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * f(a + i * h);
        const double val = s * h / 3.0;
        if (k > 8 && std::abs(val - prev) < tol * std::max(1.0, std::abs(val)))
            return val;
        prev = val;
    }
    return prev;
}

// I_q(p) = int_0^1 s^q (1 - s^{p+1})^{-1/2} ds via the s = 1 - t^2 substitution,
// which removes the endpoint singularity.
inline double timemap_integral(double p, double q) {
    auto f = [p, q](double t) {
        const double s = 1.0 - t * t;
        const double den = 1.0 - std::pow(s, p + 1.0);
        if (den <= 0.0) {
            // t -> 0 limit: den ~ (p+1) t^2.
            return 2.0 * std::pow(1.0, q) / std::sqrt(p + 1.0);
        }
        return 2.0 * t * std::pow(s, q) / std::sqrt(den);
    };
    return simpson(f, 0.0, 1.0);
}

// Sup-norm of the positive saddle from the first-integral identity
//   x-half-period 1/2 = sqrt((p+1)/2) m^{-(p-1)/2} I_0(p).
inline double saddle_sup_norm(double p) {
    const double I0 = timemap_integral(p, 0.0);
    return std::pow(std::sqrt(2.0 * (p + 1.0)) * I0, 2.0 / (p - 1.0));
}

// int_0^1 z^q dx expressed through the time map.
inline double saddle_profile_moment(double p, double q) {
    const double m = saddle_sup_norm(p);
    return std::sqrt(2.0 * (p + 1.0)) * std::pow(m, q + 1.0 - 0.5 * (p + 1.0)) *
           timemap_integral(p, q);
}

// Potential of the saddle: (m^{p+1} - 2 int z^{p+1}) / (p+1).
inline double saddle_energy(double p) {
    const double m = saddle_sup_norm(p);
    const double J = saddle_profile_moment(p, p + 1.0);
    return (std::pow(m, p + 1.0) - 2.0 * J) / (p + 1.0);
}

// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal d and
// constant off-diagonal e, by Sturm-sequence bisection.
inline double sturm_largest_eigenvalue(const std::vector<double>& d, double e) {
    const int n = int(d.size());
    auto count_below = [&](double x) {
        int count = 0;
        double q = d[0] - x;
        if (q < 0.0) ++count;
        for (int i = 1; i < n; ++i) {
            const double denom = q == 0.0 ? 1e-300 : q;
            q = d[size_t(i)] - x - e * e / denom;
            if (q < 0.0) ++count;
        }
        return count;
    };
    double lo = d[0], hi = d[0];
    for (double v : d) {
        lo = std::min(lo, v - 2.0 * std::abs(e));
        hi = std::max(hi, v + 2.0 * std::abs(e));
    }
    // Largest eigenvalue: the unique x-interval where count_below crosses n-1.
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (count_below(mid) >= n ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

// Exact principal eigenvalue of the discrete Dirichlet Laplacian.
inline double discrete_laplacian_eigenvalue(int k, int n_interior) {
    const double dx = 1.0 / (n_interior + 1);
    const double s = std::sin(0.5 * k * M_PI * dx);
    return -4.0 * s * s / (dx * dx);
}

}  // namespace oracle
