// Stochastic integrator with discretized space-time white noise, stopping
// predicates and reproducible per-replica randomness.
#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mlab/detflow.hpp"
#include "mlab/rng.hpp"
#include "mlab/types.hpp"

namespace mlab {

struct HitSummary {
    double sup_norm = 0.0;
    double energy = 0.0;
    double dist_z = 0.0;
    double dist_negz = 0.0;
};

struct HitRecord {
    std::string label;
    double time = 0.0;
    HitSummary summary;
    uint64_t entry_count = 0;  // how many entries this label has seen so far
};

struct StochasticOutcome {
    enum class Kind { BlowUp, Censored };
    Kind kind = Kind::Censored;
    std::optional<double> tau_eps;
    double t_elapsed = 0.0;
    double final_sup_norm = 0.0;
    // First and last entry event per label, sorted by time.
    std::vector<HitRecord> hit_records;
    std::vector<TracePoint> path_summary;            // only when record_every set
    std::vector<std::pair<double, GridFunction>> snapshots;  // trailing ring, time-ordered
};

// Stopping/observation predicates, evaluated every step (and at t = 0).
// Entry events are edge-triggered.
struct StopPredicate {
    enum class Kind {
        SupAbove,        // ||u|| >= radius
        EnterBallZero,   // ||u|| <= radius
        EnterBall,       // ||u - center|| <= radius
        EnergyNegative,  // S_h(u) < 0
    };
    std::string label;
    Kind kind = Kind::EnterBallZero;
    double radius = 0.0;
    GridFunction center;

    static StopPredicate sup_above(std::string label, double level);
    static StopPredicate ball_zero(std::string label, double rho);
    static StopPredicate ball(std::string label, GridFunction center, double delta);
    static StopPredicate energy_negative(std::string label);
};

struct SimOptions {
    double t_max = 50.0;
    // Above this sup-norm the run continues deterministically with adaptive
    // steps (the source dominates the noise there); +inf keeps noise on and the
    // step fixed all the way to the blow-up threshold.
    double k_switch = std::numeric_limits<double>::infinity();
    std::optional<double> record_every;
    double snapshot_every = 0.0;     // 0 disables the trailing snapshot ring
    int snapshot_capacity = 256;
    int noise_sign = +1;             // sign-flip hook for mirror-symmetry checks
    // Called after every executed step with (t, sup-norm, dt of that step).
    std::function<void(double, double, double)> on_step;
};

// One semi-implicit step with additive forcing (pre-scaled by the caller as
// eps*sqrt(dt/dx) per node). With zero forcing this is deterministic_step.
GridFunction stochastic_step(const GridFunction& u, double dt,
                             const std::vector<double>& forcing,
                             const ModelParams& params);

// Fixed-step integration with per-step predicate evaluation; declares BlowUp
// at the sup-norm threshold with the asymptotic tail correction.
StochasticOutcome simulate_until(const GridFunction& u0, const NoiseSpec& spec,
                                 const std::vector<StopPredicate>& stops,
                                 const SimOptions& opts, const ModelParams& params);

// First-hit time of one label, absent if censored or blown up first.
std::optional<double> hitting_time(const GridFunction& u0, const NoiseSpec& spec,
                                   const std::vector<StopPredicate>& stops,
                                   const std::string& label, const SimOptions& opts,
                                   const ModelParams& params);

}  // namespace mlab
