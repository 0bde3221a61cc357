#include "mlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "mlab/detflow.hpp"
#include "mlab/equilibria.hpp"
#include "mlab/field.hpp"
#include "mlab/pool.hpp"
#include "mlab/stoflow.hpp"

namespace mlab {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "mlab 1.0.0";
constexpr const char* kCsvHeader =
    "replica_id,epsilon,outcome,tau,beta_used,exit_label,exit_time,windowed_dev,"
    "n_windows,hits";

const std::set<std::string> kExperiments = {
    "continuity", "scaling", "exit-location", "exp-law", "time-average"};

bool needs_metastable_range(const std::string& experiment) {
    return experiment != "continuity";
}

}  // namespace

void ExperimentConfig::validate() const {
    if (!kExperiments.count(experiment))
        fail("RangeError", "unknown experiment: " + experiment);
    if (!(p > 1.0)) fail("RangeError", "p must satisfy p > 1, got " + std::to_string(p));
    if (needs_metastable_range(experiment) && !(p < 5.0))
        fail("RangeError", "experiment '" + experiment +
                               "' requires 1 < p < 5, got p = " + std::to_string(p));
    if (grid < 3) fail("RangeError", "grid must be >= 3");
    if (!(dt > 0.0)) fail("RangeError", "dt must be > 0");
    if (replicas < 1) fail("RangeError", "replicas must be >= 1");
    if (!(k_blow > 0.0)) fail("RangeError", "k_blow must be > 0");
    if (!(tau_delta_rel > 0.0)) fail("RangeError", "tau_delta_rel must be > 0");
    if (!(ladder_min_ratio > 0.0) || !(ladder_max_ratio >= ladder_min_ratio))
        fail("RangeError", "ladder ratios must satisfy 0 < min <= max");
    if (ladder_rungs < 1) fail("RangeError", "ladder_rungs must be >= 1");
    if (!(t_cap_prefactor > 0.0)) fail("RangeError", "t_cap_prefactor must be > 0");
    if (!(snapshot_every > 0.0)) fail("RangeError", "snapshot_every must be > 0");
    for (double e : epsilons)
        if (!(e >= 0.0)) fail("RangeError", "epsilons must be >= 0");
}

namespace {

double parse_number(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        fail("TypeError", "key '" + key + "' expects a number, got '" + value + "'");
    }
}

long long parse_integer(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        fail("TypeError", "key '" + key + "' expects an integer, got '" + value + "'");
    }
}

std::vector<double> parse_eps_list(const std::string& value) {
    if (value == "auto" || value.empty()) return {};
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(parse_number("epsilons", item));
    return out;
}

}  // namespace

void apply_override(ExperimentConfig& config, const std::string& key,
                    const std::string& value) {
    if (key == "experiment") config.experiment = value;
    else if (key == "p") config.p = parse_number(key, value);
    else if (key == "grid") config.grid = int(parse_integer(key, value));
    else if (key == "dt") config.dt = parse_number(key, value);
    else if (key == "epsilons") config.epsilons = parse_eps_list(value);
    else if (key == "replicas") config.replicas = int(parse_integer(key, value));
    else if (key == "master_seed") config.master_seed = uint64_t(parse_integer(key, value));
    else if (key == "t_max") config.t_max = parse_number(key, value);
    else if (key == "init") config.init = value;
    else if (key == "delta") config.delta = parse_number(key, value);
    else if (key == "rho") config.rho = parse_number(key, value);
    else if (key == "out_dir") config.out_dir = value;
    else if (key == "tau_delta_rel") config.tau_delta_rel = parse_number(key, value);
    else if (key == "k_blow") config.k_blow = parse_number(key, value);
    else if (key == "workers") config.workers = int(parse_integer(key, value));
    else if (key == "ladder_min_ratio") config.ladder_min_ratio = parse_number(key, value);
    else if (key == "ladder_max_ratio") config.ladder_max_ratio = parse_number(key, value);
    else if (key == "ladder_rungs") config.ladder_rungs = int(parse_integer(key, value));
    else if (key == "t_cap_prefactor") config.t_cap_prefactor = parse_number(key, value);
    else if (key == "snapshot_every") config.snapshot_every = parse_number(key, value);
    else fail("UnknownKey", "unknown config key: " + key);
}

ExperimentConfig parse_config(const std::string& path,
                              const std::vector<std::string>& overrides) {
    ExperimentConfig config;
    auto apply_line = [&](const std::string& raw) {
        std::string line = raw;
        if (const size_t hash = line.find('#'); hash != std::string::npos)
            line = line.substr(0, hash);
        const auto first = line.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) return;
        const auto last = line.find_last_not_of(" \t\r\n");
        line = line.substr(first, last - first + 1);
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail("TypeError", "expected key=value, got '" + line + "'");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        apply_override(config, trim(key), trim(value));
    };

    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) fail("IOError", "cannot open config file: " + path);
        std::string line;
        while (std::getline(in, line)) apply_line(line);
    }
    for (const auto& ov : overrides) apply_line(ov);
    config.validate();
    return config;
}

// ------------------------------------------------------------------
// Shared experiment context
// ------------------------------------------------------------------

namespace {

struct Ctx {
    ModelParams params;
    Equilibrium z;
    double m = 0.0;         // ||z||_inf
    double c = 0.0;         // convergence ball radius
    double rho = 0.0;       // B_rho radius
    double delta = 0.0;     // B_delta(+-z) radius
    double delta_eff = 0.0; // 2 S_h(z) on the configured grid
    double k_switch = 0.0;
    GridFunction z_prof;
    GridFunction negz_prof;
    int workers = 1;
};

Ctx make_ctx(const ExperimentConfig& cfg) {
    Ctx ctx;
    ctx.params.p = cfg.p;
    ctx.params.n_interior = cfg.grid;
    ctx.params.dt = cfg.dt;
    ctx.params.blowup_threshold = cfg.k_blow;
    ctx.z = compute_z(ctx.params);
    ctx.m = ctx.z.sup_norm;
    ctx.c = 0.2 * ctx.m;
    ctx.rho = cfg.rho > 0.0 ? cfg.rho : ctx.c;
    ctx.delta = cfg.delta > 0.0 ? cfg.delta : 0.3 * ctx.m;
    ctx.delta_eff = 2.0 * energy(ctx.z.profile, ctx.params);
    ctx.k_switch = 10.0 * ctx.m;
    ctx.z_prof = ctx.z.profile;
    ctx.negz_prof = -1.0 * ctx.z.profile;
    ctx.workers = cfg.workers > 0 ? cfg.workers : default_workers();
    return ctx;
}

GridFunction parse_init(const std::string& text, const Ctx& ctx) {
    return make_initial_state(text, ctx.z_prof, ctx.params.n_interior);
}

std::vector<double> resolve_ladder(const ExperimentConfig& cfg, const Ctx& ctx) {
    std::vector<double> eps = cfg.epsilons;
    if (eps.empty()) {
        if (cfg.experiment == "continuity") {
            eps = {0.4, 0.2, 0.1};
        } else {
            // Barrier rule: ratios Delta_eff/eps^2 span the configured band.
            for (int i = 0; i < cfg.ladder_rungs; ++i) {
                const double f = cfg.ladder_rungs == 1
                                     ? 0.0
                                     : double(i) / double(cfg.ladder_rungs - 1);
                const double ratio =
                    cfg.ladder_min_ratio + f * (cfg.ladder_max_ratio - cfg.ladder_min_ratio);
                eps.push_back(std::sqrt(ctx.delta_eff / ratio));
            }
        }
    }
    std::sort(eps.rbegin(), eps.rend());
    if (eps.empty()) fail("RangeError", "epsilons resolved to an empty ladder");
    return eps;
}

double auto_t_max(const ExperimentConfig& cfg, const Ctx& ctx, double eps) {
    if (cfg.t_max > 0.0) return cfg.t_max;
    const double ratio = ctx.delta_eff / (eps * eps);
    return cfg.t_cap_prefactor * std::exp(ratio);
}

// Window accumulator for the time-average observable f(u) = min(||u||, clip).
struct WindowAccum {
    double ds = 0.0;
    double clip = 0.0;
    double integral = 0.0;
    double next_cp = 0.0;
    std::vector<double> cps;  // prefix integral at checkpoint times k*ds

    void init(double R, double clip_level) {
        ds = R / 256.0;
        clip = clip_level;
        cps.push_back(0.0);
        next_cp = ds;
    }
    void on_step(double t, double sup, double dt) {
        integral += std::min(sup, clip) * dt;
        while (t + 1e-12 >= next_cp) {
            cps.push_back(integral);
            next_cp += ds;
        }
    }
    // sup over window starts in [0, t_end - 3R] of |window mean - 0|.
    std::pair<double, int> finish(double R, double t_end) const {
        const int W = 256;
        double dev = 0.0;
        int n_windows = 0;
        for (size_t k = 0; k + W < cps.size(); ++k) {
            const double window_end = double(k + W) * ds;
            if (window_end > t_end - 2.0 * R) break;
            const double avg = (cps[k + W] - cps[k]) / (double(W) * ds);
            dev = std::max(dev, std::abs(avg));
            ++n_windows;
        }
        return {dev, n_windows};
    }
};

struct RawResult {
    StochasticOutcome out;
    double windowed_dev = std::numeric_limits<double>::quiet_NaN();
    int n_windows = -1;
};

RawResult run_one(const Ctx& ctx, const ExperimentConfig& cfg, const GridFunction& u0,
                  double eps, uint32_t rid, double t_max,
                  const std::vector<StopPredicate>& preds, bool want_snapshots,
                  double window_R) {
    NoiseSpec spec;
    spec.epsilon = eps;
    spec.master_seed = cfg.master_seed;
    spec.replica_id = rid;

    SimOptions so;
    so.t_max = t_max;
    so.k_switch = ctx.k_switch;
    if (want_snapshots) so.snapshot_every = cfg.snapshot_every;

    RawResult raw;
    WindowAccum acc;
    if (window_R > 0.0) {
        acc.init(window_R, 2.0 * ctx.m);
        so.on_step = [&acc](double t, double sup, double dt) { acc.on_step(t, sup, dt); };
    }
    raw.out = simulate_until(u0, spec, preds, so, ctx.params);
    if (window_R > 0.0) {
        const double t_end = raw.out.kind == StochasticOutcome::Kind::BlowUp
                                 ? *raw.out.tau_eps
                                 : raw.out.t_elapsed;
        std::tie(raw.windowed_dev, raw.n_windows) = acc.finish(window_R, t_end);
    }
    return raw;
}

std::string encode_hits(const StochasticOutcome& out) {
    // label:first:last:count, first/last equal when only one entry was seen.
    std::map<std::string, std::pair<HitRecord, HitRecord>> by_label;
    std::map<std::string, uint64_t> counts;
    for (const auto& h : out.hit_records) {
        auto it = by_label.find(h.label);
        if (it == by_label.end()) {
            by_label.emplace(h.label, std::make_pair(h, h));
        } else {
            it->second.second = h;
        }
        counts[h.label] = std::max(counts[h.label], h.entry_count);
    }
    std::string s;
    for (const auto& [label, fl] : by_label) {
        if (!s.empty()) s += ';';
        s += label + ":" + format_double(fl.first.time) + ":" +
             format_double(fl.second.time) + ":" + std::to_string(counts[label]);
    }
    return s;
}

struct HitInfo {
    double first = std::numeric_limits<double>::quiet_NaN();
    double last = std::numeric_limits<double>::quiet_NaN();
    uint64_t count = 0;
};

std::map<std::string, HitInfo> decode_hits(const std::string& text) {
    std::map<std::string, HitInfo> out;
    if (text.empty()) return out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        std::stringstream is(item);
        std::string label, first, last, count;
        std::getline(is, label, ':');
        std::getline(is, first, ':');
        std::getline(is, last, ':');
        std::getline(is, count, ':');
        HitInfo info;
        info.first = std::stod(first);
        info.last = std::stod(last);
        info.count = std::stoull(count);
        out[label] = info;
    }
    return out;
}

// Exit label: the later of the last entries into the +-z delta-balls.
std::string exit_label_from_hits(const std::map<std::string, HitInfo>& hits,
                                 const std::string& pos, const std::string& neg) {
    const auto zp = hits.find(pos);
    const auto zn = hits.find(neg);
    if (zp == hits.end() && zn == hits.end()) return "other";
    if (zp == hits.end()) return "-z";
    if (zn == hits.end()) return "z";
    return zp->second.last >= zn->second.last ? "z" : "-z";
}

// First snapshot along the trailing ring that classifies as De (bisection
// under the near-monotone D0 -> De transition).
std::pair<double, bool> scan_exit_time(const Ctx& ctx, const StochasticOutcome& out) {
    const auto& shots = out.snapshots;
    if (shots.empty()) return {std::numeric_limits<double>::quiet_NaN(), false};

    EvolveOptions copts;
    copts.convergence_radius = ctx.c;
    copts.classify_horizon = 50.0;
    auto is_de = [&](size_t i) {
        return classify(shots[i].second, copts, ctx.params).basin ==
               Classification::Basin::De;
    };

    size_t hi = shots.size() - 1;
    if (!is_de(hi)) return {std::numeric_limits<double>::quiet_NaN(), false};
    if (is_de(0)) return {shots[0].first, true};  // exit predates the ring
    size_t lo = 0;
    while (hi - lo > 1) {
        const size_t mid = (lo + hi) / 2;
        (is_de(mid) ? hi : lo) = mid;
    }
    return {shots[hi].first, true};
}

std::vector<StopPredicate> exit_predicates(const Ctx& ctx) {
    std::vector<StopPredicate> preds;
    preds.push_back(StopPredicate::ball("z", ctx.z_prof, ctx.delta));
    preds.push_back(StopPredicate::ball("-z", ctx.negz_prof, ctx.delta));
    preds.push_back(StopPredicate::ball("z0.5", ctx.z_prof, 0.5 * ctx.delta));
    preds.push_back(StopPredicate::ball("-z0.5", ctx.negz_prof, 0.5 * ctx.delta));
    preds.push_back(StopPredicate::ball("z1.5", ctx.z_prof, 1.5 * ctx.delta));
    preds.push_back(StopPredicate::ball("-z1.5", ctx.negz_prof, 1.5 * ctx.delta));
    return preds;
}

ReplicaRecord base_record(uint32_t rid, double eps, const RawResult& raw) {
    ReplicaRecord rec;
    rec.replica_id = rid;
    rec.epsilon = eps;
    rec.outcome =
        raw.out.kind == StochasticOutcome::Kind::BlowUp ? "blowup" : "censored";
    if (raw.out.tau_eps) rec.tau = *raw.out.tau_eps;
    rec.windowed_dev = raw.windowed_dev;
    rec.n_windows = raw.n_windows;
    rec.hits = encode_hits(raw.out);
    return rec;
}

// ------------------------------------------------------------------
// Experiment drivers (records only; aggregates are recomputed uniformly)
// ------------------------------------------------------------------

double deterministic_tau(const ExperimentConfig& cfg, const Ctx& ctx) {
    const GridFunction u0 = parse_init(cfg.init, ctx);
    EvolveOptions opts;
    opts.convergence_radius = ctx.c;
    opts.classify_horizon = 50.0;
    const Classification cls = classify(u0, opts, ctx.params);
    if (cls.basin != Classification::Basin::De || !cls.tau)
        fail("RangeError", "continuity requires an initial state that explodes "
                           "deterministically (init classified " +
                               std::string(cls.basin == Classification::Basin::D0
                                               ? "D0"
                                               : "Undecided") +
                               ")");
    return *cls.tau;
}

std::vector<ReplicaRecord> run_continuity(const ExperimentConfig& cfg, const Ctx& ctx) {
    const GridFunction u0 = parse_init(cfg.init, ctx);
    const double tau_det = deterministic_tau(cfg, ctx);
    const std::vector<double> ladder = resolve_ladder(cfg, ctx);
    const int R = cfg.replicas;
    std::vector<ReplicaRecord> records(ladder.size() * size_t(R));
    const double t_max = cfg.t_max > 0.0 ? cfg.t_max : 3.0 * tau_det + 5.0;

    run_indexed(int(records.size()), ctx.workers, [&](int j) {
        const size_t e = size_t(j) / size_t(R);
        const uint32_t rid = uint32_t(j % R);
        const RawResult raw =
            run_one(ctx, cfg, u0, ladder[e], rid, t_max, {}, false, 0.0);
        records[size_t(j)] = base_record(rid, ladder[e], raw);
    });
    return records;
}

std::vector<ReplicaRecord> run_scaling(const ExperimentConfig& cfg, const Ctx& ctx) {
    const GridFunction u0 = parse_init(cfg.init, ctx);
    const std::vector<double> ladder = resolve_ladder(cfg, ctx);
    const int R = cfg.replicas;
    std::vector<ReplicaRecord> records(ladder.size() * size_t(R));

    run_indexed(int(records.size()), ctx.workers, [&](int j) {
        const size_t e = size_t(j) / size_t(R);
        const uint32_t rid = uint32_t(j % R);
        const double t_max = auto_t_max(cfg, ctx, ladder[e]);
        const RawResult raw =
            run_one(ctx, cfg, u0, ladder[e], rid, t_max, {}, false, 0.0);
        records[size_t(j)] = base_record(rid, ladder[e], raw);
    });

    for (size_t e = 0; e < ladder.size(); ++e) {
        int unc = 0;
        for (int r = 0; r < R; ++r)
            if (records[e * size_t(R) + size_t(r)].outcome == "blowup") ++unc;
        if (2 * unc < R)
            fail("InsufficientUncensored",
                 "fewer than half the replicas exploded at epsilon = " +
                     format_double(ladder[e]));
    }
    return records;
}

std::vector<ReplicaRecord> run_exit_location(const ExperimentConfig& cfg, const Ctx& ctx) {
    const GridFunction u0 = parse_init(cfg.init, ctx);
    const std::vector<double> ladder = resolve_ladder(cfg, ctx);
    const int R = cfg.replicas;
    const std::vector<StopPredicate> preds = exit_predicates(ctx);
    std::vector<ReplicaRecord> records(ladder.size() * size_t(R));

    run_indexed(int(records.size()), ctx.workers, [&](int j) {
        const size_t e = size_t(j) / size_t(R);
        const uint32_t rid = uint32_t(j % R);
        const double t_max = auto_t_max(cfg, ctx, ladder[e]);
        const RawResult raw =
            run_one(ctx, cfg, u0, ladder[e], rid, t_max, preds, true, 0.0);
        ReplicaRecord rec = base_record(rid, ladder[e], raw);
        if (raw.out.kind == StochasticOutcome::Kind::BlowUp) {
            rec.exit_label =
                exit_label_from_hits(decode_hits(rec.hits), "z", "-z");
            const auto [exit_t, ok] = scan_exit_time(ctx, raw.out);
            if (ok) rec.exit_time = exit_t;
        }
        records[size_t(j)] = rec;
    });
    return records;
}

std::vector<ReplicaRecord> run_exp_law(const ExperimentConfig& cfg, const Ctx& ctx) {
    const GridFunction u0 = parse_init(cfg.init, ctx);
    const std::vector<double> ladder = resolve_ladder(cfg, ctx);
    const int R = cfg.replicas;
    std::vector<ReplicaRecord> records(ladder.size() * size_t(R));

    for (size_t e = 0; e < ladder.size(); ++e) {
        const double eps = ladder[e];
        const double t_max = auto_t_max(cfg, ctx, eps);

        // Phase A: even replicas estimate the normalization.
        std::vector<int> evens, odds;
        for (int r = 0; r < R; ++r) (r % 2 == 0 ? evens : odds).push_back(r);

        run_indexed(int(evens.size()), ctx.workers, [&](int idx) {
            const uint32_t rid = uint32_t(evens[size_t(idx)]);
            const RawResult raw = run_one(ctx, cfg, u0, eps, rid, t_max, {}, false, 0.0);
            records[e * size_t(R) + size_t(rid)] = base_record(rid, eps, raw);
        });

        std::vector<double> taus;
        size_t censored = 0;
        for (int r : evens) {
            const auto& rec = records[e * size_t(R) + size_t(r)];
            if (rec.outcome == "blowup") taus.push_back(rec.tau);
            else ++censored;
        }
        const BetaEstimate beta = beta_from_samples(taus, censored, t_max);
        const double window_R = std::sqrt(beta.beta);

        // Phase B: odd replicas carry the KS sample and the window statistics.
        run_indexed(int(odds.size()), ctx.workers, [&](int idx) {
            const uint32_t rid = uint32_t(odds[size_t(idx)]);
            const RawResult raw =
                run_one(ctx, cfg, u0, eps, rid, t_max, {}, false, window_R);
            ReplicaRecord rec = base_record(rid, eps, raw);
            rec.beta_used = beta.beta;
            records[e * size_t(R) + size_t(rid)] = rec;
        });
    }
    return records;
}

std::vector<double> ladder_from_records(const std::vector<ReplicaRecord>& records) {
    std::vector<double> eps;
    for (const auto& r : records)
        if (eps.empty() || eps.back() != r.epsilon) {
            if (std::find(eps.begin(), eps.end(), r.epsilon) == eps.end())
                eps.push_back(r.epsilon);
        }
    std::sort(eps.rbegin(), eps.rend());
    return eps;
}

}  // namespace

// ------------------------------------------------------------------
// Aggregates (pure function of config + records)
// ------------------------------------------------------------------

nlohmann::ordered_json recompute_aggregates(const ExperimentConfig& config,
                                            const std::vector<ReplicaRecord>& records) {
    ordered_json agg;
    agg["experiment"] = config.experiment;
    agg["version"] = kVersion;

    ordered_json cfg_block;
    cfg_block["experiment"] = config.experiment;
    cfg_block["p"] = config.p;
    cfg_block["grid"] = config.grid;
    cfg_block["dt"] = config.dt;
    cfg_block["epsilons"] = config.epsilons;
    cfg_block["replicas"] = config.replicas;
    cfg_block["master_seed"] = config.master_seed;
    cfg_block["t_max"] = config.t_max;
    cfg_block["init"] = config.init;
    cfg_block["delta"] = config.delta;
    cfg_block["rho"] = config.rho;
    cfg_block["out_dir"] = config.out_dir;
    cfg_block["tau_delta_rel"] = config.tau_delta_rel;
    cfg_block["k_blow"] = config.k_blow;
    cfg_block["ladder_min_ratio"] = config.ladder_min_ratio;
    cfg_block["ladder_max_ratio"] = config.ladder_max_ratio;
    cfg_block["ladder_rungs"] = config.ladder_rungs;
    cfg_block["t_cap_prefactor"] = config.t_cap_prefactor;
    cfg_block["snapshot_every"] = config.snapshot_every;
    agg["config"] = cfg_block;

    if (records.empty()) {
        agg["n_records"] = 0;
        agg["aggregates_absent"] = true;
        agg["assertions"] = ordered_json::array();
        agg["passed"] = true;
        return agg;
    }
    agg["n_records"] = records.size();

    const Ctx ctx = make_ctx(config);
    agg["z_sup_norm"] = ctx.m;
    agg["delta_eff"] = ctx.delta_eff;
    agg["delta_ball"] = ctx.delta;
    agg["rho_ball"] = ctx.rho;

    const std::vector<double> ladder = ladder_from_records(records);
    ordered_json assertions = ordered_json::array();
    auto assert_that = [&](const std::string& name, bool pass, double value,
                           double threshold) {
        ordered_json a;
        a["name"] = name;
        a["pass"] = pass;
        a["value"] = value;
        a["threshold"] = threshold;
        assertions.push_back(a);
    };

    auto rung_records = [&](double eps) {
        std::vector<const ReplicaRecord*> out;
        for (const auto& r : records)
            if (r.epsilon == eps) out.push_back(&r);
        return out;
    };

    if (config.experiment == "continuity") {
        const double tau_det = deterministic_tau(config, ctx);
        const double delta_abs = config.tau_delta_rel * tau_det;
        agg["tau_det"] = tau_det;
        agg["delta_abs"] = delta_abs;
        ordered_json per_eps = ordered_json::array();
        std::vector<double> qs;
        for (double eps : ladder) {
            const auto rs = rung_records(eps);
            int n = 0, exceed = 0;
            for (const auto* r : rs) {
                ++n;
                const bool far = r->outcome != "blowup" ||
                                 std::abs(r->tau - tau_det) > delta_abs;
                if (far) ++exceed;
            }
            const double q = n > 0 ? double(exceed) / double(n) : 0.0;
            qs.push_back(q);
            ordered_json row;
            row["epsilon"] = eps;
            row["n"] = n;
            row["n_exceed"] = exceed;
            row["q"] = q;
            per_eps.push_back(row);
        }
        agg["per_epsilon"] = per_eps;
        bool monotone = true;
        for (size_t i = 0; i + 1 < qs.size(); ++i)
            if (qs[i] < qs[i + 1]) monotone = false;
        assert_that("q_nonincreasing_along_ladder", monotone, 0.0, 0.0);
        assert_that("q_zero_at_smallest_eps", qs.back() == 0.0, qs.back(), 0.0);
    }

    if (config.experiment == "scaling") {
        ordered_json per_eps = ordered_json::array();
        std::vector<double> xs, ys, ws;
        std::vector<std::vector<double>> taus_per_eps;
        std::vector<double> medians;
        for (double eps : ladder) {
            const auto rs = rung_records(eps);
            std::vector<double> taus;
            size_t censored = 0;
            for (const auto* r : rs)
                r->outcome == "blowup" ? taus.push_back(r->tau) : void(++censored);
            ordered_json row;
            row["epsilon"] = eps;
            row["ratio"] = ctx.delta_eff / (eps * eps);
            row["n"] = rs.size();
            row["n_uncensored"] = taus.size();
            if (!taus.empty()) {
                const double med = median(taus);
                const BetaEstimate beta = beta_from_samples(
                    taus, censored, auto_t_max(config, ctx, eps));
                row["median_tau"] = med;
                row["beta"] = beta.beta;
                row["beta_lower_bound_only"] = beta.lower_bound_only;
                medians.push_back(med);
                xs.push_back(1.0 / (eps * eps));
                ys.push_back(std::log(med));
                ws.push_back(double(taus.size()));
                taus_per_eps.push_back(taus);
            }
            per_eps.push_back(row);
        }
        agg["per_epsilon"] = per_eps;
        if (xs.size() >= 2) {
            const LineFit fit = weighted_least_squares(xs, ys, ws);
            const auto [ci_lo, ci_hi] =
                bootstrap_slope_ci(xs, taus_per_eps, config.master_seed);
            ordered_json f;
            f["slope"] = fit.slope;
            f["intercept"] = fit.intercept;
            f["ci_lo"] = ci_lo;
            f["ci_hi"] = ci_hi;
            agg["fit"] = f;
            bool medians_monotone = true;
            for (size_t i = 0; i + 1 < medians.size(); ++i)
                if (medians[i] > medians[i + 1]) medians_monotone = false;
            agg["medians_monotone_in_ratio"] = medians_monotone;
            assert_that("slope_within_factor_two_of_delta_eff",
                        fit.slope >= 0.5 * ctx.delta_eff &&
                            fit.slope <= 2.0 * ctx.delta_eff,
                        fit.slope, ctx.delta_eff);
            assert_that("bootstrap_ci_excludes_zero", ci_lo > 0.0, ci_lo, 0.0);
        } else {
            assert_that("fit_available", false, 0.0, 0.0);
        }
    }

    if (config.experiment == "exit-location") {
        ordered_json per_eps = ordered_json::array();
        double smallest_fz = 0.0, smallest_fnegz = 0.0;
        double split_z = 0.0, split_sigma = 0.0;
        int smallest_n_exploded = 0;
        for (double eps : ladder) {
            const auto rs = rung_records(eps);
            int n_expl = 0, nz = 0, nnegz = 0, nother = 0;
            int nz_half = 0, nnegz_half = 0, nz_threehalf = 0, nnegz_threehalf = 0;
            int n_exit_scanned = 0;
            for (const auto* r : rs) {
                if (r->outcome != "blowup") continue;
                ++n_expl;
                if (r->exit_label == "z") ++nz;
                else if (r->exit_label == "-z") ++nnegz;
                else ++nother;
                const auto hits = decode_hits(r->hits);
                const std::string l_half = exit_label_from_hits(hits, "z0.5", "-z0.5");
                const std::string l_threehalf =
                    exit_label_from_hits(hits, "z1.5", "-z1.5");
                if (hits.count("z0.5") || hits.count("-z0.5"))
                    (l_half == "z" ? nz_half : nnegz_half) += 1;
                if (hits.count("z1.5") || hits.count("-z1.5"))
                    (l_threehalf == "z" ? nz_threehalf : nnegz_threehalf) += 1;
                if (!std::isnan(r->exit_time)) ++n_exit_scanned;
            }
            ordered_json row;
            row["epsilon"] = eps;
            row["n"] = rs.size();
            row["n_exploded"] = n_expl;
            const double dn = n_expl > 0 ? double(n_expl) : 1.0;
            row["f_z"] = nz / dn;
            row["f_negz"] = nnegz / dn;
            row["f_other"] = nother / dn;
            row["f_pm_half_delta"] = (nz_half + nnegz_half) / dn;
            row["f_pm_threehalf_delta"] = (nz_threehalf + nnegz_threehalf) / dn;
            row["n_exit_time_scanned"] = n_exit_scanned;
            per_eps.push_back(row);
            if (eps == ladder.back()) {
                smallest_fz = nz / dn;
                smallest_fnegz = nnegz / dn;
                smallest_n_exploded = n_expl;
                const int split_n = nz + nnegz;
                if (split_n > 0) {
                    split_z = double(nz) / split_n - 0.5;
                    split_sigma = std::sqrt(0.25 / split_n);
                }
            }
        }
        agg["per_epsilon"] = per_eps;
        assert_that("exit_through_pm_z_fraction",
                    smallest_n_exploded > 0 &&
                        smallest_fz + smallest_fnegz >= 0.9,
                    smallest_fz + smallest_fnegz, 0.9);
        if (config.init == "zero" || config.init == "0")
            assert_that("symmetric_split_within_3_sigma",
                        std::abs(split_z) <= 3.0 * split_sigma, split_z,
                        3.0 * split_sigma);
    }

    if (config.experiment == "exp-law" || config.experiment == "time-average") {
        ordered_json per_eps = ordered_json::array();
        double last_D = 0.0, last_thr = 0.0;
        size_t last_n = 0;
        double last_frac = 0.0, last_R_over_beta = 0.0;
        size_t last_windowed = 0;
        for (double eps : ladder) {
            const auto rs = rung_records(eps);
            std::vector<double> even_taus, odd_norm;
            size_t even_cens = 0;
            size_t n_windowed = 0, n_exceed = 0;
            const double f_scale = 2.0 * ctx.m;
            const double delta_f = 0.2 * f_scale;
            for (const auto* r : rs) {
                if (r->replica_id % 2 == 0) {
                    if (r->outcome == "blowup") even_taus.push_back(r->tau);
                    else ++even_cens;
                }
            }
            const BetaEstimate beta = beta_from_samples(
                even_taus, even_cens, auto_t_max(config, ctx, eps));
            const double window_R = std::sqrt(beta.beta);
            for (const auto* r : rs) {
                if (r->replica_id % 2 != 1) continue;
                if (r->outcome == "blowup") odd_norm.push_back(r->tau / beta.beta);
                if (r->n_windows > 0) {
                    ++n_windowed;
                    if (r->windowed_dev > delta_f) ++n_exceed;
                }
            }
            ordered_json row;
            row["epsilon"] = eps;
            row["n"] = rs.size();
            row["beta"] = beta.beta;
            row["beta_lower_bound_only"] = beta.lower_bound_only;
            row["n_test"] = odd_norm.size();
            double D = 0.0;
            if (!odd_norm.empty()) {
                D = ks_statistic_exp1(odd_norm);
                row["ks_D"] = D;
                row["sqrt_n_D"] = std::sqrt(double(odd_norm.size())) * D;
                row["ks_threshold_1pct"] = 1.63 / std::sqrt(double(odd_norm.size()));
            }
            row["window_R"] = window_R;
            row["R_over_beta"] = window_R / beta.beta;
            row["f_scale"] = f_scale;
            row["delta_f"] = delta_f;
            row["n_windowed"] = n_windowed;
            const double frac =
                n_windowed > 0 ? double(n_exceed) / double(n_windowed) : 0.0;
            row["fraction_exceeding"] = frac;
            per_eps.push_back(row);
            if (eps == ladder.back()) {
                last_D = D;
                last_n = odd_norm.size();
                last_thr = odd_norm.empty() ? 0.0
                                            : 1.63 / std::sqrt(double(odd_norm.size()));
                last_frac = frac;
                last_R_over_beta = window_R / beta.beta;
                last_windowed = n_windowed;
            }
        }
        agg["per_epsilon"] = per_eps;
        if (config.experiment == "exp-law") {
            assert_that("ks_sample_size", last_n >= 200, double(last_n), 200.0);
            assert_that("ks_pass_1pct", last_n > 0 && last_D <= last_thr, last_D,
                        last_thr);
        } else {
            assert_that("window_sample_nonempty", last_windowed > 0,
                        double(last_windowed), 1.0);
            assert_that("fraction_exceeding_at_most_5pct", last_frac <= 0.05,
                        last_frac, 0.05);
            assert_that("R_over_beta_at_most_0.1", last_R_over_beta <= 0.1,
                        last_R_over_beta, 0.1);
        }
    }

    bool passed = true;
    for (const auto& a : assertions)
        if (!a["pass"].get<bool>()) passed = false;
    agg["assertions"] = assertions;
    agg["passed"] = passed;
    return agg;
}

// ------------------------------------------------------------------
// Run, write, read
// ------------------------------------------------------------------

double estimate_beta(double epsilon, const ExperimentConfig& config) {
    ExperimentConfig cfg = config;
    cfg.experiment = "scaling";
    cfg.init = "zero";
    cfg.validate();
    const Ctx ctx = make_ctx(cfg);
    const GridFunction u0(ctx.params.n_interior);
    const double t_max = auto_t_max(cfg, ctx, epsilon);
    std::vector<double> taus(size_t(cfg.replicas),
                             std::numeric_limits<double>::quiet_NaN());
    run_indexed(cfg.replicas, ctx.workers, [&](int rid) {
        const RawResult raw =
            run_one(ctx, cfg, u0, epsilon, uint32_t(rid), t_max, {}, false, 0.0);
        if (raw.out.tau_eps) taus[size_t(rid)] = *raw.out.tau_eps;
    });
    std::vector<double> finished;
    size_t censored = 0;
    for (double t : taus) std::isnan(t) ? void(++censored) : finished.push_back(t);
    return beta_from_samples(finished, censored, t_max).beta;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    const Ctx ctx = make_ctx(config);

    ExperimentReport report;
    report.config = config;
    if (config.experiment == "continuity")
        report.per_replica = run_continuity(config, ctx);
    else if (config.experiment == "scaling")
        report.per_replica = run_scaling(config, ctx);
    else if (config.experiment == "exit-location")
        report.per_replica = run_exit_location(config, ctx);
    else
        report.per_replica = run_exp_law(config, ctx);

    report.aggregates = recompute_aggregates(config, report.per_replica);
    report.passed = report.aggregates["passed"].get<bool>();
    return report;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

GridFunction make_initial_state(const std::string& preset, const GridFunction& z_profile,
                                int n_interior) {
    if (preset == "zero" || preset == "0") return GridFunction(n_interior);
    if (preset == "sin")
        return GridFunction::sample(n_interior,
                                    [](double x) { return std::sin(M_PI * x); });
    if (preset == "z") return z_profile;
    if (!preset.empty() && preset.front() == '@') {
        std::ifstream in(preset.substr(1));
        if (!in) fail("IOError", "cannot open init file: " + preset.substr(1));
        std::vector<std::pair<double, double>> samples;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#' || line.rfind("x,", 0) == 0) continue;
            std::stringstream ss(line);
            std::string a, b;
            if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',')) continue;
            samples.emplace_back(std::stod(a), std::stod(b));
        }
        return resample_linear(samples, n_interior);
    }
    if (preset.size() > 1 && preset.back() == 'z') {
        const double lam = parse_number("init", preset.substr(0, preset.size() - 1));
        return lam * z_profile;
    }
    fail("RangeError", "unknown init preset: " + preset);
}

namespace {

void write_survival_plotdata(const ExperimentConfig& config,
                             const std::vector<ReplicaRecord>& records,
                             const std::string& dir) {
    std::ofstream out(dir + "/plotdata_survival.csv");
    out << "epsilon,t,survival\n";
    for (double eps : ladder_from_records(records)) {
        std::vector<double> taus;
        size_t n = 0;
        for (const auto& r : records)
            if (r.epsilon == eps) {
                ++n;
                if (r.outcome == "blowup") taus.push_back(r.tau);
            }
        std::sort(taus.begin(), taus.end());
        for (size_t k = 0; k < taus.size(); ++k)
            out << format_double(eps) << ',' << format_double(taus[k]) << ','
                << format_double(double(n - k - 1) / double(n)) << '\n';
    }
    (void)config;
}

void write_experiment_plotdata(const ExperimentReport& report, const std::string& dir) {
    const auto& agg = report.aggregates;
    const std::string exp = report.config.experiment;
    if (!agg.contains("per_epsilon")) return;
    if (exp == "continuity") {
        std::ofstream out(dir + "/plotdata_continuity.csv");
        out << "epsilon,q\n";
        for (const auto& row : agg["per_epsilon"])
            out << format_double(row["epsilon"].get<double>()) << ','
                << format_double(row["q"].get<double>()) << '\n';
    } else if (exp == "scaling") {
        std::ofstream out(dir + "/plotdata_scaling.csv");
        out << "inv_eps_sq,log_median_tau,weight\n";
        for (const auto& row : agg["per_epsilon"]) {
            if (!row.contains("median_tau")) continue;
            const double eps = row["epsilon"].get<double>();
            out << format_double(1.0 / (eps * eps)) << ','
                << format_double(std::log(row["median_tau"].get<double>())) << ','
                << format_double(double(row["n_uncensored"].get<size_t>())) << '\n';
        }
    } else if (exp == "exit-location") {
        std::ofstream out(dir + "/plotdata_exit.csv");
        out << "epsilon,f_z,f_negz,f_other\n";
        for (const auto& row : agg["per_epsilon"])
            out << format_double(row["epsilon"].get<double>()) << ','
                << format_double(row["f_z"].get<double>()) << ','
                << format_double(row["f_negz"].get<double>()) << ','
                << format_double(row["f_other"].get<double>()) << '\n';
    } else {
        std::ofstream out(dir + "/plotdata_explaw.csv");
        out << "epsilon,ks_D,sqrt_n_D,fraction_exceeding,R_over_beta\n";
        for (const auto& row : agg["per_epsilon"]) {
            out << format_double(row["epsilon"].get<double>()) << ','
                << (row.contains("ks_D") ? format_double(row["ks_D"].get<double>())
                                         : std::string())
                << ','
                << (row.contains("sqrt_n_D")
                        ? format_double(row["sqrt_n_D"].get<double>())
                        : std::string())
                << ',' << format_double(row["fraction_exceeding"].get<double>())
                << ',' << format_double(row["R_over_beta"].get<double>()) << '\n';
        }
    }
}

}  // namespace

void write_report(const ExperimentReport& report, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);

    std::ofstream csv(out_dir + "/replicas.csv");
    if (!csv) fail("IOError", "cannot write " + out_dir + "/replicas.csv");
    csv << kCsvHeader << '\n';
    for (const auto& r : report.per_replica) {
        csv << r.replica_id << ',' << format_double(r.epsilon) << ',' << r.outcome
            << ',' << format_double(r.tau) << ',' << format_double(r.beta_used)
            << ',' << r.exit_label << ',' << format_double(r.exit_time) << ','
            << format_double(r.windowed_dev) << ','
            << (r.n_windows < 0 ? std::string() : std::to_string(r.n_windows))
            << ',' << r.hits << '\n';
    }
    csv.close();

    std::ofstream js(out_dir + "/aggregates.json");
    if (!js) fail("IOError", "cannot write " + out_dir + "/aggregates.json");
    js << report.aggregates.dump(2) << '\n';
    js.close();

    write_survival_plotdata(report.config, report.per_replica, out_dir);
    write_experiment_plotdata(report, out_dir);
}

std::vector<ReplicaRecord> read_replica_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("IOError", "cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader)
        fail("FormatError", "unexpected replicas.csv header");
    std::vector<ReplicaRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::string col;
        std::stringstream ss(line);
        while (std::getline(ss, col, ',')) cols.push_back(col);
        // `hits` may itself contain no commas; pad to full width.
        while (cols.size() < 10) cols.push_back("");
        ReplicaRecord r;
        r.replica_id = uint32_t(std::stoul(cols[0]));
        r.epsilon = std::stod(cols[1]);
        r.outcome = cols[2];
        r.tau = cols[3].empty() ? std::numeric_limits<double>::quiet_NaN()
                                : std::stod(cols[3]);
        r.beta_used = cols[4].empty() ? std::numeric_limits<double>::quiet_NaN()
                                      : std::stod(cols[4]);
        r.exit_label = cols[5];
        r.exit_time = cols[6].empty() ? std::numeric_limits<double>::quiet_NaN()
                                      : std::stod(cols[6]);
        r.windowed_dev = cols[7].empty() ? std::numeric_limits<double>::quiet_NaN()
                                         : std::stod(cols[7]);
        r.n_windows = cols[8].empty() ? -1 : std::stoi(cols[8]);
        r.hits = cols[9];
        out.push_back(r);
    }
    return out;
}

}  // namespace mlab
