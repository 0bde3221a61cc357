// Monte Carlo experiment harness: configuration, replica scheduling, report
// generation. Aggregates are a pure function of (config, per-replica records)
// so reports can be recomputed and verified from their own CSV output.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlab/stats.hpp"
#include "mlab/types.hpp"

namespace mlab {

struct ExperimentConfig {
    std::string experiment = "scaling";  // continuity|scaling|exit-location|exp-law|time-average
    double p = 3.0;
    int grid = 31;
    double dt = 2e-3;
    std::vector<double> epsilons;        // empty => auto ladder from the barrier rule
    int replicas = 200;
    uint64_t master_seed = 12061958ull;
    double t_max = 0.0;                  // 0 => auto per experiment
    std::string init = "zero";           // zero | sin | z | <real>z | @csvfile
    double delta = 0.0;                  // ball radius around +-z; 0 => 0.3*||z||
    double rho = 0.0;                    // ball radius around 0;   0 => 0.2*||z||
    std::string out_dir = "mlab_out";
    double tau_delta_rel = 0.1;          // continuity tolerance, relative to det tau
    double k_blow = 1e4;
    int workers = 0;                     // 0 => MLAB_WORKERS or hardware concurrency
    double ladder_min_ratio = 4.0;       // auto ladder spans ratio = Delta_eff/eps^2
    double ladder_max_ratio = 12.0;
    int ladder_rungs = 4;
    double t_cap_prefactor = 30.0;       // auto t_max = prefactor * exp(ratio)
    double snapshot_every = 0.5;         // exit-scan snapshot spacing

    void validate() const;
};

struct ReplicaRecord {
    uint32_t replica_id = 0;
    double epsilon = 0.0;
    std::string outcome;     // "blowup" | "censored"
    double tau = std::numeric_limits<double>::quiet_NaN();
    double beta_used = std::numeric_limits<double>::quiet_NaN();
    std::string exit_label;  // "z" | "-z" | "other" | ""
    double exit_time = std::numeric_limits<double>::quiet_NaN();
    double windowed_dev = std::numeric_limits<double>::quiet_NaN();
    int n_windows = -1;
    // "label:first:last:count" items joined by ';'
    std::string hits;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<ReplicaRecord> per_replica;  // sorted by (epsilon desc, replica_id)
    nlohmann::ordered_json aggregates;
    bool passed = false;
};

// Line-based key=value file (# comments, blank lines ok) merged with
// command-line overrides of the same form. Unknown keys are errors.
ExperimentConfig parse_config(const std::string& path,
                              const std::vector<std::string>& overrides);
void apply_override(ExperimentConfig& config, const std::string& key,
                    const std::string& value);

// Survival-quantile normalization from u0 = 0 at one epsilon; runs its own
// replicas under the given config. Throws Error("AllCensored") if nothing exploded.
double estimate_beta(double epsilon, const ExperimentConfig& config);

ExperimentReport run_experiment(const ExperimentConfig& config);

// Pure recomputation of the aggregate block from records; run_experiment uses
// exactly this function, so a CSV round trip reproduces aggregates bit-exactly.
nlohmann::ordered_json recompute_aggregates(const ExperimentConfig& config,
                                            const std::vector<ReplicaRecord>& records);

void write_report(const ExperimentReport& report, const std::string& out_dir);
std::vector<ReplicaRecord> read_replica_csv(const std::string& path);

// Deterministic double formatting shared by every writer (%.17g).
std::string format_double(double v);

// Initial-state presets shared by the harness and the CLI:
// "zero" | "sin" | "z" | "<real>z" | "@file.csv" (two-column x,value).
GridFunction make_initial_state(const std::string& preset, const GridFunction& z_profile,
                                int n_interior);

}  // namespace mlab
