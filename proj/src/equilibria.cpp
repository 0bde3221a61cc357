#include "mlab/equilibria.hpp"

#include <algorithm>
#include <cmath>

#include "mlab/detflow.hpp"
#include "mlab/field.hpp"

namespace mlab {

namespace {

// General tridiagonal solve (Thomas); a = sub, b = diag, c = super. d is
// overwritten with the solution.
void solve_tridiagonal(const std::vector<double>& a, std::vector<double> b,
                       const std::vector<double>& c, std::vector<double>& d) {
    const int n = int(b.size());
    for (int i = 1; i < n; ++i) {
        const double m = a[size_t(i)] / b[size_t(i - 1)];
        b[size_t(i)] -= m * c[size_t(i - 1)];
        d[size_t(i)] -= m * d[size_t(i - 1)];
    }
    d[size_t(n - 1)] /= b[size_t(n - 1)];
    for (int i = n - 2; i >= 0; --i)
        d[size_t(i)] = (d[size_t(i)] - c[size_t(i)] * d[size_t(i + 1)]) / b[size_t(i)];
}

// Discrete shooting: w_0 = 0, w_1 = s*dx, w_{i+1} = 2w_i - w_{i-1} - dx^2 g(w_i).
// Returns true if w dips below zero at or before the last node ("overshoot").
bool shoot_overshoots(double s, int n_interior, double p) {
    const double dx = 1.0 / (n_interior + 1);
    const double dx2 = dx * dx;
    double wm = 0.0, w = s * dx;
    if (w < 0.0) return true;
    for (int i = 1; i <= n_interior; ++i) {
        const double wp = 2.0 * w - wm - dx2 * g_scalar(w, p);
        wm = w;
        w = wp;
        if (w < 0.0) return true;
        if (!(w < 1e12)) return false;  // ran away upward: undershoot side
    }
    return false;
}

// Discrete positive BVP solution on n_interior nodes: bisect the shooting
// slope, then Newton-polish the full second-difference system.
GridFunction solve_saddle_profile(int n_interior, double p, double tol,
                                  double* out_residual) {
    // Bracket the threshold slope.
    double s_lo = 1e-8, s_hi = 1.0;
    int guard = 0;
    while (shoot_overshoots(s_lo, n_interior, p)) {
        s_lo *= 0.5;
        if (++guard > 200) fail("NoBracket", "no undershoot slope found");
    }
    guard = 0;
    while (!shoot_overshoots(s_hi, n_interior, p)) {
        s_hi *= 2.0;
        if (++guard > 400) fail("NoBracket", "no overshoot slope found");
    }
    for (int it = 0; it < 200 && (s_hi - s_lo) > 1e-16 * s_hi; ++it) {
        const double mid = 0.5 * (s_lo + s_hi);
        (shoot_overshoots(mid, n_interior, p) ? s_hi : s_lo) = mid;
    }

    const double dx = 1.0 / (n_interior + 1);
    const double dx2 = dx * dx;
    GridFunction w(n_interior);
    {
        double wm = 0.0, wc = s_lo * dx;
        w[1] = wc;
        for (int i = 1; i < n_interior; ++i) {
            const double wp = 2.0 * wc - wm - dx2 * g_scalar(wc, p);
            wm = wc;
            wc = wp;
            w[i + 1] = std::max(wp, 0.0);
        }
    }

    // Newton on F_i = (w_{i-1} - 2w_i + w_{i+1})/dx^2 + g(w_i).
    const int n = n_interior;
    const double idx2 = 1.0 / dx2;
    std::vector<double> sub(size_t(n), idx2), sup(size_t(n), idx2);
    std::vector<double> diag(size_t(n)), rhs(size_t(n));
    ModelParams mp;
    mp.p = p;
    mp.n_interior = n;
    double res = equilibrium_residual(w, mp);
    for (int it = 0; it < 40; ++it) {
        if (res <= 1e-3 * tol) break;
        for (int i = 1; i <= n; ++i) {
            rhs[size_t(i - 1)] =
                -((w[i - 1] - 2.0 * w[i] + w[i + 1]) * idx2 + g_scalar(w[i], p));
            diag[size_t(i - 1)] = -2.0 * idx2 + p * std::pow(std::abs(w[i]), p - 1.0);
        }
        solve_tridiagonal(sub, diag, sup, rhs);
        for (int i = 1; i <= n; ++i) w[i] += rhs[size_t(i - 1)];
        const double next = equilibrium_residual(w, mp);
        if (next >= res) break;
        res = next;
    }
    if (res > tol) fail("NoConvergence", "saddle residual above tolerance");
    if (out_residual) *out_residual = res;
    return w;
}

double center_max(const GridFunction& w) {
    double m = 0.0;
    for (double v : w.values) m = std::max(m, v);
    return m;
}

}  // namespace

double equilibrium_residual(const GridFunction& w, const ModelParams& params) {
    const int n = w.n_interior();
    const double idx2 = double(n + 1) * double(n + 1);
    double r = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double d = (w[i - 1] - 2.0 * w[i] + w[i + 1]) * idx2 +
                         g_scalar(w[i], params.p);
        r = std::max(r, std::abs(d));
    }
    return r;
}

Equilibrium compute_z(const ModelParams& params, double tol) {
    params.validate();
    const int n = params.n_interior;
    const double p = params.p;

    Equilibrium eq;
    eq.index = 1;
    eq.profile = solve_saddle_profile(n, p, tol, &eq.residual);

    // One Richardson step across N and 2N+1 removes the O(dx^2) bias of the
    // scalar diagnostics (the profile itself stays the discrete solution).
    const GridFunction fine = solve_saddle_profile(2 * n + 1, p, tol, nullptr);
    ModelParams coarse_p = params;
    ModelParams fine_p = params;
    fine_p.n_interior = 2 * n + 1;
    const double m_c = center_max(eq.profile), m_f = center_max(fine);
    const double e_c = energy(eq.profile, coarse_p), e_f = energy(fine, fine_p);
    eq.sup_norm = (4.0 * m_f - m_c) / 3.0;
    eq.energy = (4.0 * e_f - e_c) / 3.0;

    const auto [mu, dir] = unstable_eigenpair(eq, params);
    eq.unstable_eigenvalue = mu;
    eq.unstable_direction = dir;
    return eq;
}

Equilibrium make_zn(const Equilibrium& z, int n, const ModelParams& params,
                    double tol) {
    if (n == 0) fail("RangeError", "make_zn requires n != 0");
    const int N = z.profile.n_interior();
    const int an = std::abs(n);

    if (an == 1) {
        Equilibrium out = z;
        out.index = n;
        if (n < 0) {
            out.profile *= -1.0;
            if (out.unstable_direction) *out.unstable_direction *= -1.0;
        }
        return out;
    }
    if ((N + 1) % an != 0)
        fail("GridIncompatible", "grid intervals not divisible by |n|");

    const double p = params.p;
    const int intervals_per_tooth = (N + 1) / an;
    const int m_interior = intervals_per_tooth - 1;
    if (m_interior < 1) fail("GridIncompatible", "teeth too narrow for this grid");

    ModelParams tooth_params = params;
    tooth_params.n_interior = m_interior;
    Equilibrium tooth = compute_z(tooth_params, tol);

    const double amp = std::pow(double(an), 2.0 / (p - 1.0));
    Equilibrium out;
    out.index = n;
    out.profile = GridFunction(N);
    const double flip = n > 0 ? 1.0 : -1.0;
    for (int j = 0; j < an; ++j) {
        const double sgn = flip * (j % 2 == 0 ? 1.0 : -1.0);
        const int base = j * intervals_per_tooth;
        for (int k = 1; k <= m_interior; ++k)
            out.profile[base + k] = sgn * amp * tooth.profile[k];
    }
    out.sup_norm = amp * tooth.sup_norm;
    out.energy = std::pow(double(an), 2.0 * (p + 1.0) / (p - 1.0)) * tooth.energy;
    out.residual = equilibrium_residual(out.profile, params);

    const auto [mu, dir] = unstable_eigenpair(out, params);
    out.unstable_eigenvalue = mu;
    out.unstable_direction = dir;
    return out;
}

std::pair<double, GridFunction> unstable_eigenpair(const Equilibrium& w,
                                                   const ModelParams& params) {
    const GridFunction& prof = w.profile;
    const int n = prof.n_interior();
    const double p = params.p;
    const double idx2 = double(n + 1) * double(n + 1);

    std::vector<double> a_diag(size_t(n));
    double gersh = -4.0 * idx2;
    for (int i = 1; i <= n; ++i) {
        a_diag[size_t(i - 1)] = -2.0 * idx2 + p * std::pow(std::abs(prof[i]), p - 1.0);
        gersh = std::max(gersh, a_diag[size_t(i - 1)]);
    }

    // Shifted inverse iteration from above the spectrum, with Rayleigh updates
    // once the iterate settles.
    double shift = gersh + 1.0;
    GridFunction v = GridFunction::sample(n, [](double x) { return std::sin(M_PI * x); });
    {
        const double norm = std::sqrt(l2_inner(v, v));
        v *= 1.0 / norm;
    }
    std::vector<double> sub(size_t(n), idx2), sup(size_t(n), idx2);
    std::vector<double> diag(size_t(n)), rhs(size_t(n));

    auto apply = [&](const GridFunction& x, GridFunction& out) {
        for (int i = 1; i <= n; ++i)
            out[i] = (x[i - 1] - 2.0 * x[i] + x[i + 1]) * idx2 +
                     (a_diag[size_t(i - 1)] + 2.0 * idx2) * x[i];
    };

    GridFunction av(n);
    double mu = 0.0;
    for (int it = 0; it < 500; ++it) {
        // Solve (shift*I - A) v_next = v.
        for (int i = 0; i < n; ++i) {
            diag[size_t(i)] = shift - a_diag[size_t(i)];
            rhs[size_t(i)] = v[i + 1];
        }
        std::vector<double> neg_sub(size_t(n), -idx2), neg_sup(size_t(n), -idx2);
        solve_tridiagonal(neg_sub, diag, neg_sup, rhs);
        for (int i = 1; i <= n; ++i) v[i] = rhs[size_t(i - 1)];
        const double norm = std::sqrt(l2_inner(v, v));
        if (!(norm > 0.0) || !std::isfinite(norm))
            fail("NoConvergence", "inverse iteration degenerated");
        v *= 1.0 / norm;

        apply(v, av);
        mu = l2_inner(v, av);
        double res = 0.0;
        for (int i = 1; i <= n; ++i) res = std::max(res, std::abs(av[i] - mu * v[i]));
        if (res <= 1e-8) {
            double sign_fix = l2_inner(v, prof);
            if (sign_fix < 0.0) v *= -1.0;
            return {mu, v};
        }
        if (it >= 3) shift = mu + std::max(1e-10, 1e-6 * std::abs(mu)) + 1e-9;
    }
    fail("NoConvergence", "eigenpair iteration did not converge");
}

Path heteroclinic_orbit(const Equilibrium& z, double delta0, const ModelParams& params) {
    if (!(delta0 > 0.0)) fail("RangeError", "delta0 must be > 0");
    if (!z.unstable_direction) fail("RangeError", "equilibrium lacks unstable direction");

    ModelParams local = params;
    local.n_interior = z.profile.n_interior();
    Stepper stepper(local);

    const GridFunction& e = *z.unstable_direction;
    const double e_sup = e.sup_norm();
    GridFunction u = z.profile - (delta0 / e_sup) * e;

    Path orbit;
    orbit.times.push_back(0.0);
    orbit.states.push_back(u);

    const double t_cap = 2000.0;
    double t = 0.0;
    double sup = u.sup_norm();
    while (sup > delta0) {
        if (sup >= local.blowup_threshold)
            fail("WrongBasin", "orbit explodes; offset leaves the basin of 0");
        sup = stepper.step(u);
        t += local.dt;
        orbit.times.push_back(t);
        orbit.states.push_back(u);
        if (t > t_cap)
            fail("WrongBasin", "orbit neither decayed nor exploded before the cap");
    }
    return orbit;
}

}  // namespace mlab
