#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mlab/field.hpp"
#include "oracle_helpers.hpp"

using namespace mlab;

namespace {

ModelParams params_with(double p, int n) {
    ModelParams mp;
    mp.p = p;
    mp.n_interior = n;
    return mp;
}

GridFunction random_field(int n, unsigned seed, double amp = 1.0) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(-amp, amp);
    GridFunction u(n);
    for (int i = 1; i <= n; ++i) u[i] = dist(gen);
    return u;
}

}  // namespace

TEST_CASE("source: pointwise power law with odd symmetry") {
    const int n = 63;
    ModelParams mp = params_with(3.0, n);

    GridFunction zero(n);
    CHECK(source(zero, mp).sup_norm() == 0.0);

    GridFunction u(n);
    u[10] = 2.0;
    u[20] = -2.0;
    GridFunction g = source(u, mp);
    CHECK(g[10] == doctest::Approx(8.0).epsilon(1e-14));
    CHECK(g[20] == doctest::Approx(-8.0).epsilon(1e-14));
    CHECK(g[0] == 0.0);
    CHECK(g[n + 1] == 0.0);

    mp.p = 2.0;
    GridFunction v(n);
    v[5] = 1.5;
    CHECK(source(v, mp)[5] == doctest::Approx(2.25).epsilon(1e-14));

    // Odd symmetry is exact in floating point.
    mp.p = 2.7;
    GridFunction w = random_field(n, 11, 2.0);
    GridFunction neg_w = -1.0 * w;
    GridFunction gw = source(w, mp);
    GridFunction gnw = source(neg_w, mp);
    for (int i = 0; i <= n + 1; ++i) CHECK(gnw[i] == -gw[i]);
}

TEST_CASE("discrete_laplacian: exact on quadratics, O(dx^2) on sin") {
    const int n = 127;
    GridFunction q = GridFunction::sample(n, [](double x) { return x * (1.0 - x); });
    GridFunction lap = discrete_laplacian(q);
    for (int i = 1; i <= n; ++i) CHECK(lap[i] == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(lap[0] == 0.0);
    CHECK(lap[n + 1] == 0.0);

    GridFunction zero(n);
    CHECK(discrete_laplacian(zero).sup_norm() == 0.0);

    const int n2 = 199;
    GridFunction s = GridFunction::sample(n2, [](double x) { return std::sin(M_PI * x); });
    GridFunction ls = discrete_laplacian(s);
    const double dx = s.dx();
    double max_err = 0.0;
    for (int i = 1; i <= n2; ++i)
        max_err = std::max(max_err,
                           std::abs(ls[i] + M_PI * M_PI * std::sin(M_PI * s.x(i))));
    // Leading truncation term is pi^4 dx^2 / 12.
    CHECK(max_err < 2.0 * std::pow(M_PI, 4) * dx * dx / 12.0);
}

TEST_CASE("lp_norm against analytic sine integrals") {
    const int n = 127;
    GridFunction zero(n);
    CHECK(lp_norm(zero, 2.0) == 0.0);

    GridFunction s = GridFunction::sample(n, [](double x) { return std::sin(M_PI * x); });
    CHECK(lp_norm(s, 2.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-4));
    CHECK(lp_norm(s, 4.0) == doctest::Approx(std::pow(3.0 / 8.0, 0.25)).epsilon(1e-4));
    CHECK_THROWS_AS(lp_norm(s, 0.5), Error);
}

TEST_CASE("energy: S_h(0) = 0, sine value, even parity, quadrature order") {
    ModelParams mp = params_with(3.0, 127);
    GridFunction zero(127);
    CHECK(energy(zero, mp) == 0.0);

    auto sine_energy_error = [&](int n) {
        ModelParams local = params_with(3.0, n);
        GridFunction s =
            GridFunction::sample(n, [](double x) { return std::sin(M_PI * x); });
        const double exact = M_PI * M_PI / 4.0 - 3.0 / 32.0;
        return std::abs(energy(s, local) - exact);
    };
    CHECK(sine_energy_error(127) < 1e-3);

    // Error should drop by ~4x when dx halves.
    const double e1 = sine_energy_error(127);
    const double e2 = sine_energy_error(255);
    CHECK(e1 / e2 > 3.0);
    CHECK(e1 / e2 < 5.0);

    // Parity: |.|^{p+1} and the squared gradient are both even.
    GridFunction w = random_field(127, 5, 1.3);
    GridFunction neg_w = -1.0 * w;
    CHECK(energy(w, mp) == energy(neg_w, mp));
}

TEST_CASE("heat_kernel: boundary, symmetry, eigenfunction identity, mass") {
    CHECK(heat_kernel(0.05, 0.0, 0.3, 8) == 0.0);
    CHECK(heat_kernel(0.05, 1.0, 0.3, 8) == doctest::Approx(0.0).epsilon(1e-12));

    for (double t : {0.01, 0.1, 0.5})
        for (double x : {0.2, 0.5, 0.8})
            for (double y : {0.1, 0.6, 0.9})
                CHECK(heat_kernel(t, x, y, 8) == doctest::Approx(heat_kernel(t, y, x, 8))
                                                     .epsilon(1e-14));

    // int_0^1 Phi(t,x,y) sin(pi y) dy = e^{-pi^2 t} sin(pi x).
    const double t = 0.05, x = 0.5;
    const double quad = oracle::simpson(
        [&](double y) { return heat_kernel(t, x, y, 8) * std::sin(M_PI * y); }, 0.0,
        1.0);
    const double expected = std::exp(-M_PI * M_PI * t) * std::sin(M_PI * x);
    CHECK(expected == doctest::Approx(0.6105).epsilon(2e-4));
    CHECK(quad == doctest::Approx(expected).epsilon(1e-8));

    // Absorbing boundary: mass at most 1, and -> 1 as t -> 0+ for interior x.
    for (double tt : {1e-4, 1e-2, 0.1, 0.5}) {
        for (double xx : {0.1, 0.5, 0.9}) {
            const double mass = oracle::simpson(
                [&](double y) { return heat_kernel(tt, xx, y, 8); }, 0.0, 1.0);
            CHECK(mass <= 1.0 + 1e-9);
        }
    }
    const double mass_small_t = oracle::simpson(
        [&](double y) { return heat_kernel(1e-4, 0.5, y, 8); }, 0.0, 1.0);
    CHECK(mass_small_t == doctest::Approx(1.0).epsilon(1e-6));

    // Image truncation: doubling the count changes nothing at t >= 1e-4.
    for (double tt : {1e-4, 0.05, 1.0})
        CHECK(heat_kernel(tt, 0.3, 0.7, 8) ==
              doctest::Approx(heat_kernel(tt, 0.3, 0.7, 16)).epsilon(1e-12));

    CHECK_THROWS_AS(heat_kernel(0.0, 0.5, 0.5, 8), Error);
    CHECK_THROWS_AS(heat_kernel(-1.0, 0.5, 0.5, 8), Error);
}

TEST_CASE("l2_inner: discrete sine orthogonality") {
    const int n = 127;
    GridFunction zero(n);
    GridFunction s1 = GridFunction::sample(n, [](double x) { return std::sin(M_PI * x); });
    GridFunction s2 =
        GridFunction::sample(n, [](double x) { return std::sin(2.0 * M_PI * x); });

    CHECK(l2_inner(zero, s1) == 0.0);
    // Discrete sines are exactly orthonormal up to the 1/2 factor.
    CHECK(l2_inner(s1, s1) == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(std::abs(l2_inner(s1, s2)) < 1e-13);

    GridFunction other(63);
    CHECK_THROWS_AS(l2_inner(s1, other), Error);
}

TEST_CASE("resample_linear reproduces piecewise-linear data") {
    std::vector<std::pair<double, double>> samples = {
        {0.0, 0.0}, {0.25, 1.0}, {0.5, 0.5}, {1.0, 0.0}};
    GridFunction u = resample_linear(samples, 31);
    CHECK(u[0] == 0.0);
    CHECK(u[32] == 0.0);
    // x = 0.25 is node 8 on this grid.
    CHECK(u[8] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(u[16] == doctest::Approx(0.5).epsilon(1e-12));
}
