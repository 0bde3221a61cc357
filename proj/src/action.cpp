#include "mlab/action.hpp"

#include <algorithm>
#include <cmath>

#include "mlab/detflow.hpp"
#include "mlab/field.hpp"

namespace mlab {

ActionReport path_action(const Path& phi, const ModelParams& params) {
    phi.validate();
    const int n = phi.states.front().n_interior();
    ModelParams local = params;
    local.n_interior = n;
    const double dx = phi.states.front().dx();
    const double idx2 = 1.0 / (dx * dx);
    const double p = local.p;

    ActionReport rep;
    rep.per_segment.reserve(phi.segments());

    const double s0 = energy(phi.states.front(), local);
    double max_gain = 0.0;  // sup over T' includes T' = 0
    double action = 0.0;

    for (size_t k = 0; k + 1 < phi.states.size(); ++k) {
        const double dt = phi.times[k + 1] - phi.times[k];
        if (!(dt > 0.0)) fail("DegenerateSegment", "zero-length path segment");
        const GridFunction& a = phi.states[k];
        const GridFunction& b = phi.states[k + 1];
        double seg = 0.0;
        for (int i = 1; i <= n; ++i) {
            const double mid_m = 0.5 * (a[i - 1] + b[i - 1]);
            const double mid = 0.5 * (a[i] + b[i]);
            const double mid_p = 0.5 * (a[i + 1] + b[i + 1]);
            const double dphi = (b[i] - a[i]) / dt;
            const double lap = (mid_m - 2.0 * mid + mid_p) * idx2;
            const double defect = dphi - lap - g_scalar(mid, p);
            seg += defect * defect;
        }
        seg *= 0.5 * dx * dt;
        rep.per_segment.push_back(seg);
        action += seg;
        max_gain = std::max(max_gain, energy(b, local) - s0);
    }

    rep.action = action;
    rep.lower_bound = 2.0 * max_gain;
    return rep;
}

bool action_lower_bound_check(const Path& phi, const ModelParams& params) {
    const ActionReport rep = path_action(phi, params);
    const double tol = 1e-2 * std::max(1.0, std::abs(rep.lower_bound));
    return rep.action >= rep.lower_bound - tol;
}

namespace {

// Subsample the middle of a recorded orbit: keep every frame within
// `guard` (sup distance) of either endpoint state, elsewhere keep a frame
// once it has moved at least `thin_step` from the last kept one.
Path thin_middle(const Path& phi, double thin_step, double guard) {
    if (thin_step <= 0.0) return phi;
    Path out;
    out.times.push_back(phi.times.front());
    out.states.push_back(phi.states.front());
    const GridFunction& head = phi.states.front();
    const GridFunction& tail = phi.states.back();
    for (size_t k = 1; k + 1 < phi.states.size(); ++k) {
        const GridFunction& s = phi.states[k];
        const bool near_end = sup_dist(s, head) < guard || sup_dist(s, tail) < guard;
        if (near_end || sup_dist(s, out.states.back()) >= thin_step) {
            out.times.push_back(phi.times[k]);
            out.states.push_back(s);
        }
    }
    out.times.push_back(phi.times.back());
    out.states.push_back(phi.states.back());
    return out;
}

}  // namespace

Path build_instanton(const Equilibrium& z, double delta0, const ModelParams& params,
                     double thin_step) {
    const Path orbit = heteroclinic_orbit(z, delta0, params);
    Path inst = reverse_path(orbit);
    if (thin_step > 0.0)
        inst = thin_middle(inst, thin_step, 0.1 * z.sup_norm);
    return inst;
}

Path build_escape_path(const Equilibrium& z, double h, const ModelParams& params) {
    if (!(h > 0.0)) fail("RangeError", "escape path requires h > 0");
    const double delta0 = 1e-3 * z.sup_norm;
    Path path = build_instanton(z, delta0, params);

    // Unit-sup-speed linear interpolation from the instanton endpoint to (1+h)z.
    const GridFunction& from = path.end();
    GridFunction to = (1.0 + h) * z.profile;
    const double dist = sup_dist(to, from);
    const int steps = std::max(2, int(std::ceil(dist / (5.0 * params.dt))));
    Path interp;
    for (int k = 0; k <= steps; ++k) {
        const double s = double(k) / steps;
        interp.times.push_back(s * dist);
        GridFunction state = from;
        for (size_t i = 0; i < state.values.size(); ++i)
            state.values[i] += s * (to.values[i] - from.values[i]);
        interp.states.push_back(state);
    }
    path = concat_paths(path, interp);

    // Deterministic flow from (1+h)z until the energy turns negative.
    ModelParams local = params;
    local.n_interior = z.profile.n_interior();
    Stepper stepper(local);
    GridFunction u = to;
    Path flow;
    flow.times.push_back(0.0);
    flow.states.push_back(u);
    double t = 0.0;
    while (energy(u, local) >= 0.0) {
        stepper.step(u);
        t += local.dt;
        flow.times.push_back(t);
        flow.states.push_back(u);
        if (t > 1000.0) fail("WrongBasin", "flow from (1+h)z failed to reach S<0");
    }
    return concat_paths(path, flow);
}

double estimate_delta(const ModelParams& params) {
    return 2.0 * compute_z(params).energy;
}

}  // namespace mlab
