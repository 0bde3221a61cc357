#include "mlab/stoflow.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>

#include "mlab/field.hpp"

namespace mlab {

StopPredicate StopPredicate::sup_above(std::string label, double level) {
    StopPredicate p;
    p.label = std::move(label);
    p.kind = Kind::SupAbove;
    p.radius = level;
    return p;
}

StopPredicate StopPredicate::ball_zero(std::string label, double rho) {
    StopPredicate p;
    p.label = std::move(label);
    p.kind = Kind::EnterBallZero;
    p.radius = rho;
    return p;
}

StopPredicate StopPredicate::ball(std::string label, GridFunction center, double delta) {
    StopPredicate p;
    p.label = std::move(label);
    p.kind = Kind::EnterBall;
    p.radius = delta;
    p.center = std::move(center);
    return p;
}

StopPredicate StopPredicate::energy_negative(std::string label) {
    StopPredicate p;
    p.label = std::move(label);
    p.kind = Kind::EnergyNegative;
    return p;
}

GridFunction stochastic_step(const GridFunction& u, double dt,
                             const std::vector<double>& forcing,
                             const ModelParams& params) {
    if (int(forcing.size()) != u.n_interior())
        fail("GridMismatch", "forcing length must equal n_interior");
    ModelParams local = params;
    local.n_interior = u.n_interior();
    local.dt = dt;
    Stepper stepper(local);
    GridFunction out = u;
    stepper.step(out, forcing.data());
    return out;
}

namespace {

struct LabelState {
    bool inside = false;
    uint64_t count = 0;
    HitRecord first;
    HitRecord last;
};

}  // namespace

StochasticOutcome simulate_until(const GridFunction& u0, const NoiseSpec& spec,
                                 const std::vector<StopPredicate>& stops,
                                 const SimOptions& opts, const ModelParams& params) {
    spec.validate();
    ModelParams local = params;
    local.n_interior = u0.n_interior();
    Stepper stepper(local);
    const int n = local.n_interior;
    const double p = local.p;
    const double dt0 = local.dt;
    const double k_blow = local.blowup_threshold;
    const double dx = u0.dx();
    const double scale =
        double(opts.noise_sign) * spec.epsilon * std::sqrt(dt0 / dx);

    GridFunction u = u0;
    double t = 0.0;
    double sup = u.sup_norm();
    uint64_t step_index = 0;

    StochasticOutcome out;
    std::vector<LabelState> labels(stops.size());
    std::vector<double> noise(size_t(n));

    // The z-distance summaries reuse whatever ball predicates are registered.
    const GridFunction* z_center = nullptr;
    const GridFunction* negz_center = nullptr;
    for (const auto& s : stops) {
        if (s.kind != StopPredicate::Kind::EnterBall) continue;
        double mass = 0.0;
        for (double v : s.center.values) mass += v;
        if (mass >= 0.0 && !z_center) z_center = &s.center;
        if (mass < 0.0 && !negz_center) negz_center = &s.center;
    }

    auto summarize = [&]() {
        HitSummary h;
        h.sup_norm = sup;
        h.energy = energy(u, local);
        h.dist_z = z_center ? sup_dist(u, *z_center) : 0.0;
        h.dist_negz = negz_center ? sup_dist(u, *negz_center) : 0.0;
        return h;
    };

    auto eval_predicates = [&]() {
        for (size_t k = 0; k < stops.size(); ++k) {
            const auto& s = stops[k];
            bool in = false;
            switch (s.kind) {
                case StopPredicate::Kind::SupAbove: in = sup >= s.radius; break;
                case StopPredicate::Kind::EnterBallZero: in = sup <= s.radius; break;
                case StopPredicate::Kind::EnterBall:
                    in = sup_dist(u, s.center) <= s.radius;
                    break;
                case StopPredicate::Kind::EnergyNegative:
                    in = energy(u, local) < 0.0;
                    break;
            }
            auto& st = labels[k];
            if (in && !st.inside) {
                ++st.count;
                HitRecord rec{s.label, t, summarize(), st.count};
                if (st.count == 1) st.first = rec;
                st.last = rec;
            }
            st.inside = in;
        }
    };

    std::deque<std::pair<double, GridFunction>> ring;
    double next_snapshot = 0.0;
    auto snapshot = [&]() {
        if (opts.snapshot_every <= 0.0) return;
        if (t + 1e-12 < next_snapshot) return;
        ring.emplace_back(t, u);
        if (int(ring.size()) > opts.snapshot_capacity) ring.pop_front();
        next_snapshot += opts.snapshot_every;
    };

    double next_record = 0.0;
    auto record = [&]() {
        if (!opts.record_every) return;
        if (t + 1e-12 < next_record) return;
        TracePoint pt;
        pt.t = t;
        pt.sup_norm = sup;
        pt.energy = energy(u, local);
        pt.dist_z = z_center ? sup_dist(u, *z_center) : 0.0;
        pt.dist_negz = negz_center ? sup_dist(u, *negz_center) : 0.0;
        out.path_summary.push_back(pt);
        next_record += *opts.record_every;
    };

    eval_predicates();
    snapshot();
    record();

    while (true) {
        if (sup >= k_blow) {
            out.kind = StochasticOutcome::Kind::BlowUp;
            out.tau_eps = t + std::pow(sup, 1.0 - p) / (p - 1.0);
            break;
        }
        if (t >= opts.t_max) {
            out.kind = StochasticOutcome::Kind::Censored;
            break;
        }

        double dt_step = dt0;
        if (sup <= opts.k_switch && spec.epsilon > 0.0) {
            stepper.set_dt(dt0);
            sample_noise_field(spec, step_index, noise);
            for (double& v : noise) v *= scale;
            sup = stepper.step(u, noise.data());
        } else if (sup <= opts.k_switch) {
            stepper.set_dt(dt0);
            sup = stepper.step(u);
        } else {
            // Source-dominated regime: deterministic adaptive stepping.
            dt_step = std::min(dt0, 0.1 * std::pow(sup, 1.0 - p));
            stepper.set_dt(dt_step);
            sup = stepper.step(u);
        }
        t += dt_step;
        ++step_index;
        eval_predicates();
        snapshot();
        record();
        if (opts.on_step) opts.on_step(t, sup, dt_step);
    }

    out.t_elapsed = t;
    out.final_sup_norm = sup;
    for (size_t k = 0; k < stops.size(); ++k) {
        const auto& st = labels[k];
        if (st.count == 0) continue;
        out.hit_records.push_back(st.first);
        if (st.count > 1) out.hit_records.push_back(st.last);
    }
    std::stable_sort(out.hit_records.begin(), out.hit_records.end(),
                     [](const HitRecord& a, const HitRecord& b) { return a.time < b.time; });
    out.snapshots.assign(ring.begin(), ring.end());
    return out;
}

std::optional<double> hitting_time(const GridFunction& u0, const NoiseSpec& spec,
                                   const std::vector<StopPredicate>& stops,
                                   const std::string& label, const SimOptions& opts,
                                   const ModelParams& params) {
    bool known = false;
    for (const auto& s : stops)
        if (s.label == label) known = true;
    if (!known) fail("UnknownLabel", "label not registered: " + label);

    const StochasticOutcome out = simulate_until(u0, spec, stops, opts, params);
    for (const auto& h : out.hit_records)
        if (h.label == label && h.entry_count == 1) return h.time;
    // The retained records always include the first entry; no first entry
    // means the label never fired.
    for (const auto& h : out.hit_records)
        if (h.label == label) return h.time;
    return std::nullopt;
}

}  // namespace mlab
