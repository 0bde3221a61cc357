// Deterministic integrator with blow-up detection and basin classification.
#pragma once

#include <optional>
#include <vector>

#include "mlab/field.hpp"
#include "mlab/types.hpp"

namespace mlab {

struct TracePoint {
    double t = 0.0;
    double sup_norm = 0.0;
    double energy = 0.0;
    double dist_z = 0.0;     // filled only when a +-z ball predicate is registered
    double dist_negz = 0.0;
};

struct ExplosionOutcome {
    enum class Kind { BlowUp, ConvergedToZero, ConvergedToEquilibrium, Censored };

    Kind kind = Kind::Censored;
    int equilibrium_index = 0;          // only meaningful for ConvergedToEquilibrium
    std::optional<double> tau;          // estimated explosion time when kind == BlowUp
    double t_elapsed = 0.0;
    double final_sup_norm = 0.0;
    std::vector<TracePoint> trace;      // nonempty only when recording was requested
};

struct EvolveOptions {
    double t_max = 50.0;
    std::optional<double> record_every;
    bool adaptive = true;
    double convergence_radius = 0.0;    // c; entry into B_c starts the verification clock
    double classify_horizon = 50.0;
    double verify_interval = 1.0;       // time the state must stay inside B_c
    double adapt_above = 0.0;           // sup-norm gate before dt shrinking is considered

    static EvolveOptions for_saddle(double z_sup_norm) {
        EvolveOptions o;
        o.convergence_radius = 0.2 * z_sup_norm;
        return o;
    }
};

// Shared semi-implicit kernel: (I - dt*L) u+ = u + dt*g(u) + forcing.
// The tridiagonal factorization is cached and rebuilt only when dt changes.
class Stepper {
public:
    Stepper(const ModelParams& params, bool with_source = true);

    void set_dt(double dt);
    double dt() const { return dt_; }
    const ModelParams& params() const { return params_; }

    // Advances u by one step and returns the new sup-norm. forcing, when given,
    // holds n_interior pre-scaled additive increments. Throws Error("Overflow")
    // past the finite-representation guard.
    double step(GridFunction& u, const double* forcing = nullptr);

private:
    ModelParams params_;
    bool with_source_;
    double dt_ = 0.0;
    double idx2_ = 0.0;
    std::vector<double> upper_;   // Thomas elimination coefficients
    std::vector<double> rhs_;
};

// One semi-implicit step as a pure function.
GridFunction deterministic_step(const GridFunction& u, double dt, const ModelParams& params);

// Integrate until blow-up, verified entry into B_c, or t_max.
ExplosionOutcome evolve(const GridFunction& u0, const EvolveOptions& opts,
                        const ModelParams& params);

// tau from evolve when it blows up, absent otherwise.
std::optional<double> explosion_time(const GridFunction& u0, const EvolveOptions& opts,
                                     const ModelParams& params);

struct Classification {
    enum class Basin { D0, De, Undecided };
    Basin basin = Basin::Undecided;
    std::optional<double> tau;          // estimated explosion time when basin == De
};

// Basin of u0: De once the energy goes negative, D0 on verified entry into
// B_c, Undecided when the horizon runs out.
Classification classify(const GridFunction& u0, const EvolveOptions& opts,
                        const ModelParams& params);

// Threshold lambda on the ray {lambda*u0}: bisection between a certified-D0
// lower bracket and a certified-De upper bracket.
double critical_lambda(const GridFunction& u0, double tol, const EvolveOptions& opts,
                       const ModelParams& params, double lambda_max = 1e6);

// Blow-up time of the scalar ODE y' = a + b*y^q, y(0) = y0, by quadrature of
// the convergent integral int dy/(a + b y^q).
double scalar_blowup_time(double a, double b, double q, double y0);

// Upper-bound candidate for the explosion time of u0 with negative energy:
// blow-up time of y' = -4*S_h(u0) + 2((p-1)/(p+1)) y^{(p+1)/2}, y(0) = <u0,u0>.
double energy_blowup_bound(const GridFunction& u0, const ModelParams& params);

}  // namespace mlab
