#include "mlab/detflow.hpp"

#include <algorithm>
#include <cmath>

namespace mlab {

namespace {

constexpr double kOverflowGuard = 1e100;

// 16-point Gauss-Legendre nodes/weights on [-1,1] (positive half; mirrored).
constexpr int kGlHalf = 8;
constexpr double kGlX[kGlHalf] = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
constexpr double kGlW[kGlHalf] = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

template <class F>
double gauss16(F f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < kGlHalf; ++i)
        s += kGlW[i] * (f(mid - half * kGlX[i]) + f(mid + half * kGlX[i]));
    return s * half;
}

}  // namespace

Stepper::Stepper(const ModelParams& params, bool with_source)
    : params_(params), with_source_(with_source) {
    params_.validate();
    const double dx = 1.0 / (params_.n_interior + 1);
    idx2_ = 1.0 / (dx * dx);
    rhs_.resize(size_t(params_.n_interior));
    set_dt(params_.dt);
}

void Stepper::set_dt(double dt) {
    if (dt == dt_) return;
    if (!(dt > 0.0)) fail("RangeError", "step size must be > 0");
    dt_ = dt;
    const int n = params_.n_interior;
    const double r = dt * idx2_;
    const double diag = 1.0 + 2.0 * r;
    const double off = -r;
    upper_.assign(size_t(n), 0.0);
    double denom = diag;
    upper_[0] = off / denom;
    for (int i = 1; i < n; ++i) {
        denom = diag - off * upper_[size_t(i - 1)];
        upper_[size_t(i)] = off / denom;
    }
}

double Stepper::step(GridFunction& u, const double* forcing) {
    const int n = params_.n_interior;
    const double p = params_.p;
    const double r = dt_ * idx2_;
    const double diag = 1.0 + 2.0 * r;
    const double off = -r;

    if (with_source_) {
        if (p == 3.0) {
            for (int i = 1; i <= n; ++i) {
                const double v = u[i];
                rhs_[size_t(i - 1)] = v + dt_ * v * v * v;
            }
        } else {
            for (int i = 1; i <= n; ++i)
                rhs_[size_t(i - 1)] = u[i] + dt_ * g_scalar(u[i], p);
        }
    } else {
        for (int i = 1; i <= n; ++i) rhs_[size_t(i - 1)] = u[i];
    }
    if (forcing)
        for (int i = 0; i < n; ++i) rhs_[size_t(i)] += forcing[i];

    // Thomas solve with the cached elimination coefficients.
    double denom = diag;
    rhs_[0] /= denom;
    for (int i = 1; i < n; ++i) {
        denom = diag - off * upper_[size_t(i - 1)];
        rhs_[size_t(i)] = (rhs_[size_t(i)] - off * rhs_[size_t(i - 1)]) / denom;
    }
    for (int i = n - 2; i >= 0; --i)
        rhs_[size_t(i)] -= upper_[size_t(i)] * rhs_[size_t(i + 1)];

    double sup = 0.0;
    for (int i = 1; i <= n; ++i) {
        u[i] = rhs_[size_t(i - 1)];
        sup = std::max(sup, std::abs(u[i]));
    }
    if (!(sup < kOverflowGuard)) fail("Overflow", "state exceeded the finite guard");
    return sup;
}

GridFunction deterministic_step(const GridFunction& u, double dt, const ModelParams& params) {
    ModelParams local = params;
    local.n_interior = u.n_interior();
    local.dt = dt;
    Stepper stepper(local);
    GridFunction out = u;
    stepper.step(out);
    return out;
}

ExplosionOutcome evolve(const GridFunction& u0, const EvolveOptions& opts,
                        const ModelParams& params) {
    ModelParams local = params;
    local.n_interior = u0.n_interior();
    Stepper stepper(local);
    const double p = local.p;
    const double dt0 = local.dt;
    const double k_blow = local.blowup_threshold;

    ExplosionOutcome out;
    GridFunction u = u0;
    double t = 0.0;
    double sup = u.sup_norm();
    std::optional<double> in_ball_since;
    double next_record = 0.0;

    auto record = [&](double tt, double ss) {
        if (!opts.record_every) return;
        if (tt + 1e-15 >= next_record) {
            out.trace.push_back({tt, ss, energy(u, local)});
            next_record += *opts.record_every;
        }
    };
    record(0.0, sup);

    while (true) {
        if (sup >= k_blow) {
            out.kind = ExplosionOutcome::Kind::BlowUp;
            out.tau = t + std::pow(sup, 1.0 - p) / (p - 1.0);
            break;
        }
        if (opts.convergence_radius > 0.0 && sup <= opts.convergence_radius) {
            if (!in_ball_since) in_ball_since = t;
            if (t - *in_ball_since >= opts.verify_interval) {
                out.kind = ExplosionOutcome::Kind::ConvergedToZero;
                break;
            }
        } else {
            in_ball_since.reset();
        }
        if (t >= opts.t_max) {
            out.kind = ExplosionOutcome::Kind::Censored;
            break;
        }

        double dt_eff = dt0;
        if (opts.adaptive && sup > opts.adapt_above && sup > 1.0)
            dt_eff = std::min(dt0, 0.1 * std::pow(sup, 1.0 - p));
        stepper.set_dt(dt_eff);
        sup = stepper.step(u);
        t += dt_eff;
        record(t, sup);
    }

    out.t_elapsed = t;
    out.final_sup_norm = sup;
    return out;
}

std::optional<double> explosion_time(const GridFunction& u0, const EvolveOptions& opts,
                                     const ModelParams& params) {
    const ExplosionOutcome out = evolve(u0, opts, params);
    if (out.kind == ExplosionOutcome::Kind::BlowUp) return out.tau;
    return std::nullopt;
}

Classification classify(const GridFunction& u0, const EvolveOptions& opts,
                        const ModelParams& params) {
    ModelParams local = params;
    local.n_interior = u0.n_interior();
    Stepper stepper(local);
    const double p = local.p;
    const double dt0 = local.dt;
    const double k_blow = local.blowup_threshold;

    GridFunction u = u0;
    double t = 0.0;
    double sup = u.sup_norm();
    std::optional<double> in_ball_since;
    bool energy_negative = false;

    while (true) {
        if (!energy_negative && energy(u, local) < 0.0) energy_negative = true;
        if (energy_negative) {
            // Commit to De and keep integrating for the explosion-time estimate.
            if (sup >= k_blow)
                return {Classification::Basin::De,
                        t + std::pow(sup, 1.0 - p) / (p - 1.0)};
        } else {
            if (opts.convergence_radius > 0.0 && sup <= opts.convergence_radius) {
                if (!in_ball_since) in_ball_since = t;
                if (t - *in_ball_since >= opts.verify_interval)
                    return {Classification::Basin::D0, std::nullopt};
            } else {
                in_ball_since.reset();
            }
            if (t >= opts.classify_horizon)
                return {Classification::Basin::Undecided, std::nullopt};
        }

        double dt_eff = dt0;
        if (opts.adaptive && sup > opts.adapt_above && sup > 1.0)
            dt_eff = std::min(dt0, 0.1 * std::pow(sup, 1.0 - p));
        stepper.set_dt(dt_eff);
        sup = stepper.step(u);
        t += dt_eff;
    }
}

double critical_lambda(const GridFunction& u0, double tol, const EvolveOptions& opts,
                       const ModelParams& params, double lambda_max) {
    if (!(tol > 0.0)) fail("RangeError", "critical_lambda requires tol > 0");
    bool nonzero = false;
    for (int i = 1; i <= u0.n_interior(); ++i) {
        if (u0[i] < 0.0) fail("RangeError", "critical_lambda requires a nonnegative ray");
        if (u0[i] > 0.0) nonzero = true;
    }
    if (!nonzero) fail("RangeError", "critical_lambda requires a nonzero ray");

    auto basin_at = [&](double lam) {
        return classify(lam * u0, opts, params).basin;
    };

    // Lower bracket: certified D0.
    double lo = 1.0;
    Classification::Basin b = basin_at(lo);
    int guard = 0;
    while (b != Classification::Basin::D0) {
        lo *= 0.5;
        if (++guard > 200) fail("BracketFailure", "no D0 lower bracket found");
        b = basin_at(lo);
    }
    // Upper bracket: certified De.
    double hi = std::max(1.0, 2.0 * lo);
    b = basin_at(hi);
    while (b != Classification::Basin::De) {
        hi *= 2.0;
        if (hi > lambda_max)
            fail("BracketFailure", "no De upper bracket below lambda_max");
        b = basin_at(hi);
    }

    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        switch (basin_at(mid)) {
            case Classification::Basin::D0: lo = mid; break;
            case Classification::Basin::De: hi = mid; break;
            case Classification::Basin::Undecided:
                // Near-threshold data: shrink toward the midpoint from both sides.
                lo = 0.5 * (lo + mid);
                hi = 0.5 * (mid + hi);
                break;
        }
    }
    return 0.5 * (lo + hi);
}

double scalar_blowup_time(double a, double b, double q, double y0) {
    if (!(a > 0.0) && !(y0 > 0.0))
        fail("RangeError", "scalar ODE needs a > 0 or y0 > 0 to blow up");
    if (!(b > 0.0) || !(q > 1.0))
        fail("RangeError", "scalar ODE needs b > 0 and q > 1");

    auto f = [&](double y) { return 1.0 / (a + b * std::pow(y, q)); };

    // Integrate up to Y where the power term dominates by 1e8, then add the
    // series tail of int_Y^inf dy/(a + b y^q).
    double yq = std::pow(std::max(y0, 1.0), q);
    double big = std::max({a, b * yq, 1.0});
    const double Y = std::max({2.0 * y0, std::pow(1e8 * big / b, 1.0 / q), 10.0});

    double T = 0.0;
    const int panels = 64;
    // Geometric panels resolve the transition from the a-dominated region.
    double lo = y0;
    const double span = Y - y0;
    for (int j = 0; j < panels; ++j) {
        const double frac = (std::pow(2.0, double(j + 1)) - 1.0) /
                            (std::pow(2.0, double(panels)) - 1.0);
        double hi_edge = y0 + span * frac;
        if (j == panels - 1) hi_edge = Y;
        T += gauss16(f, lo, hi_edge);
        lo = hi_edge;
    }

    const double byq = b * std::pow(Y, q);
    double tail = 0.0;
    double term = 1.0 / b;
    for (int k = 0; k < 4; ++k) {
        const double expo = q * (k + 1) - 1.0;
        tail += term * std::pow(Y, -expo) / expo;
        term *= -a / b;
    }
    return T + tail;
}

double energy_blowup_bound(const GridFunction& u0, const ModelParams& params) {
    ModelParams local = params;
    local.n_interior = u0.n_interior();
    const double s0 = energy(u0, local);
    if (!(s0 < 0.0))
        fail("RangeError", "energy_blowup_bound requires negative energy");
    const double p = local.p;
    const double a = -4.0 * s0;
    const double b = 2.0 * (p - 1.0) / (p + 1.0);
    const double q = 0.5 * (p + 1.0);
    const double y0 = l2_inner(u0, u0);
    return scalar_blowup_time(a, b, q, y0);
}

}  // namespace mlab
