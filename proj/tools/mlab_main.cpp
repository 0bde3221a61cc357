// Command-line front end: equilibria, deterministic/stochastic evolution,
// classification, critical-lambda, action evaluation and the Monte Carlo
// experiments.
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlab/action.hpp"
#include "mlab/detflow.hpp"
#include "mlab/equilibria.hpp"
#include "mlab/experiments.hpp"
#include "mlab/field.hpp"
#include "mlab/stoflow.hpp"

using nlohmann::ordered_json;
using namespace mlab;

namespace {

ModelParams make_params(double p, int grid, double dt, double k_blow) {
    ModelParams params;
    params.p = p;
    params.n_interior = grid;
    params.dt = dt;
    params.blowup_threshold = k_blow;
    return params;
}

void write_profile_csv(const std::string& path, const GridFunction& u) {
    std::ofstream out(path);
    if (!out) fail("IOError", "cannot write " + path);
    out << "x,value\n";
    for (int i = 0; i <= u.n_interior() + 1; ++i)
        out << format_double(u.x(i)) << ',' << format_double(u[i]) << '\n';
}

void write_trace_csv(const std::string& path, const std::vector<TracePoint>& trace,
                     bool with_dist) {
    std::ofstream out(path);
    if (!out) fail("IOError", "cannot write " + path);
    out << (with_dist ? "t,sup_norm,energy,dist_z,dist_negz" : "t,sup_norm,energy")
        << '\n';
    for (const auto& pt : trace) {
        out << format_double(pt.t) << ',' << format_double(pt.sup_norm) << ','
            << format_double(pt.energy);
        if (with_dist)
            out << ',' << format_double(pt.dist_z) << ','
                << format_double(pt.dist_negz);
        out << '\n';
    }
}

// Full-field trace: one row per frame, "t,v0,...,v{N+1}". The action
// subcommand consumes this format.
void write_fields_csv(const std::string& path, const Path& phi) {
    std::ofstream out(path);
    if (!out) fail("IOError", "cannot write " + path);
    for (size_t k = 0; k < phi.times.size(); ++k) {
        out << format_double(phi.times[k]);
        for (double v : phi.states[k].values) out << ',' << format_double(v);
        out << '\n';
    }
}

Path read_fields_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("IOError", "cannot open " + path);
    Path phi;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 't') continue;
        std::stringstream ss(line);
        std::string item;
        std::vector<double> row;
        while (std::getline(ss, item, ',')) row.push_back(std::stod(item));
        if (row.size() < 4) fail("FormatError", "field row too short in " + path);
        phi.times.push_back(row[0]);
        GridFunction u(int(row.size()) - 3);
        for (size_t i = 1; i < row.size(); ++i) u.values[i - 1] = row[i];
        u.values.front() = 0.0;
        u.values.back() = 0.0;
        phi.states.push_back(u);
    }
    phi.validate();
    return phi;
}

const char* outcome_name(ExplosionOutcome::Kind k) {
    switch (k) {
        case ExplosionOutcome::Kind::BlowUp: return "blowup";
        case ExplosionOutcome::Kind::ConvergedToZero: return "converged_to_zero";
        case ExplosionOutcome::Kind::ConvergedToEquilibrium:
            return "converged_to_equilibrium";
        default: return "censored";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"metastability lab for a stochastically forced reaction-diffusion model"};
    app.require_subcommand(1);

    // Shared model flags.
    double p = 3.0, dt = 1e-3, k_blow = 1e4, t_max = 50.0, eps = 0.0, tol = 1e-3;
    int grid = 127, index = 1;
    uint64_t seed = 12061958ull;
    uint32_t replica = 0;
    double record = 0.0;
    std::string init = "zero", out_json, trace_path, fields_path, profile_path;
    bool instanton = false;
    double instanton_h = 0.0;

    auto add_model_flags = [&](CLI::App* cmd, int default_grid) {
        grid = default_grid;
        cmd->add_option("--p", p, "source exponent (> 1)");
        cmd->add_option("--grid", grid, "interior grid nodes");
        cmd->add_option("--dt", dt, "base time step");
        cmd->add_option("--kblow", k_blow, "blow-up sup-norm threshold");
    };

    auto* eq = app.add_subcommand("equilibria", "steady states and their diagnostics");
    add_model_flags(eq, 127);
    eq->add_option("--n", index, "equilibrium index (1 = positive saddle)");
    eq->add_option("--profile", profile_path, "write the profile as x,value CSV");

    auto* ev = app.add_subcommand("evolve", "deterministic evolution with blow-up detection");
    add_model_flags(ev, 127);
    ev->add_option("--init", init, "initial state: zero|sin|z|<real>z|@file.csv");
    ev->add_option("--tmax", t_max, "time horizon");
    ev->add_option("--record", record, "trace recording interval");
    ev->add_option("--trace", trace_path, "write t,sup_norm,energy CSV here");
    ev->add_option("--fields", fields_path, "write full-field frames CSV here");

    auto* cl = app.add_subcommand("classify", "basin classification of an initial state");
    add_model_flags(cl, 127);
    cl->add_option("--init", init, "initial state preset or @file");
    cl->add_option("--horizon", t_max, "classification horizon");

    auto* crit = app.add_subcommand("critical-lambda", "threshold on the ray lambda*init");
    add_model_flags(crit, 127);
    crit->add_option("--init", init, "nonnegative initial state preset or @file");
    crit->add_option("--tol", tol, "bracket width tolerance");

    auto* sim = app.add_subcommand("simulate", "stochastic evolution of one replica");
    add_model_flags(sim, 127);
    sim->add_option("--init", init, "initial state preset or @file");
    sim->add_option("--eps", eps, "noise amplitude")->required();
    sim->add_option("--seed", seed, "master seed");
    sim->add_option("--replica", replica, "replica id");
    sim->add_option("--tmax", t_max, "censoring horizon");
    sim->add_option("--record", record, "trace recording interval");
    sim->add_option("--trace", trace_path, "write t,sup_norm,energy,dist_z,dist_negz CSV");

    auto* act = app.add_subcommand("action", "path action and the instanton");
    add_model_flags(act, 127);
    act->add_option("--path", fields_path, "full-field frames CSV to evaluate");
    act->add_flag("--instanton", instanton, "build and evaluate the instanton");
    act->add_option("--escape-h", instanton_h, "also evaluate the escape path at this h");

    auto* ex = app.add_subcommand("experiment", "Monte Carlo experiment driver");
    std::string exp_name, config_path;
    std::vector<std::string> overrides;
    ex->add_option("name", exp_name,
                   "continuity|scaling|exit-location|exp-law|time-average")
        ->required();
    ex->add_option("--config", config_path, "key=value config file");
    ex->add_option("set", overrides, "trailing key=value overrides");

    CLI11_PARSE(app, argc, argv);

    try {
        ordered_json out;

        if (eq->parsed()) {
            const ModelParams params = make_params(p, grid, dt, k_blow);
            const Equilibrium z = compute_z(params);
            const Equilibrium w = index == 1 ? z : make_zn(z, index, params);
            out["index"] = w.index;
            out["sup_norm"] = w.sup_norm;
            out["energy"] = w.energy;
            out["residual"] = w.residual;
            if (w.unstable_eigenvalue) out["unstable_eigenvalue"] = *w.unstable_eigenvalue;
            if (!profile_path.empty()) write_profile_csv(profile_path, w.profile);
        } else if (ev->parsed()) {
            const ModelParams params = make_params(p, grid, dt, k_blow);
            const Equilibrium z = compute_z(params);
            const GridFunction u0 = make_initial_state(init, z.profile, grid);
            EvolveOptions opts = EvolveOptions::for_saddle(z.sup_norm);
            opts.t_max = t_max;
            if (record > 0.0) opts.record_every = record;
            const ExplosionOutcome res = evolve(u0, opts, params);
            out["outcome"] = outcome_name(res.kind);
            if (res.tau) out["tau"] = *res.tau;
            out["t_elapsed"] = res.t_elapsed;
            out["final_sup_norm"] = res.final_sup_norm;
            if (!trace_path.empty()) write_trace_csv(trace_path, res.trace, false);
            if (!fields_path.empty()) {
                // Re-run recording full frames at the trace interval.
                Stepper stepper(params);
                GridFunction u = u0;
                Path phi;
                phi.times.push_back(0.0);
                phi.states.push_back(u);
                double t = 0.0;
                const double every = record > 0.0 ? record : params.dt;
                double next = every;
                while (t < res.t_elapsed - 0.5 * params.dt) {
                    stepper.step(u);
                    t += params.dt;
                    if (t + 1e-12 >= next) {
                        phi.times.push_back(t);
                        phi.states.push_back(u);
                        next += every;
                    }
                }
                write_fields_csv(fields_path, phi);
            }
        } else if (cl->parsed()) {
            const ModelParams params = make_params(p, grid, dt, k_blow);
            const Equilibrium z = compute_z(params);
            const GridFunction u0 = make_initial_state(init, z.profile, grid);
            EvolveOptions opts = EvolveOptions::for_saddle(z.sup_norm);
            opts.classify_horizon = t_max;
            const Classification cls = classify(u0, opts, params);
            out["basin"] = cls.basin == Classification::Basin::D0
                               ? "D0"
                               : cls.basin == Classification::Basin::De ? "De"
                                                                        : "Undecided";
            if (cls.tau) out["tau"] = *cls.tau;
        } else if (crit->parsed()) {
            const ModelParams params = make_params(p, grid, dt, k_blow);
            const Equilibrium z = compute_z(params);
            const GridFunction u0 = make_initial_state(init, z.profile, grid);
            EvolveOptions opts = EvolveOptions::for_saddle(z.sup_norm);
            out["lambda_c"] = critical_lambda(u0, tol, opts, params);
        } else if (sim->parsed()) {
            const ModelParams params = make_params(p, grid, dt, k_blow);
            const Equilibrium z = compute_z(params);
            const GridFunction u0 = make_initial_state(init, z.profile, grid);
            NoiseSpec spec;
            spec.epsilon = eps;
            spec.master_seed = seed;
            spec.replica_id = replica;
            SimOptions opts;
            opts.t_max = t_max;
            opts.k_switch = 10.0 * z.sup_norm;
            if (record > 0.0) opts.record_every = record;
            std::vector<StopPredicate> preds;
            preds.push_back(StopPredicate::ball("z", z.profile, 0.3 * z.sup_norm));
            preds.push_back(
                StopPredicate::ball("-z", -1.0 * z.profile, 0.3 * z.sup_norm));
            const StochasticOutcome res = simulate_until(u0, spec, preds, opts, params);
            out["outcome"] =
                res.kind == StochasticOutcome::Kind::BlowUp ? "blowup" : "censored";
            if (res.tau_eps) out["tau_eps"] = *res.tau_eps;
            out["t_elapsed"] = res.t_elapsed;
            out["final_sup_norm"] = res.final_sup_norm;
            ordered_json hits = ordered_json::array();
            for (const auto& h : res.hit_records) {
                ordered_json hj;
                hj["label"] = h.label;
                hj["time"] = h.time;
                hj["entry_count"] = h.entry_count;
                hj["sup_norm"] = h.summary.sup_norm;
                hj["energy"] = h.summary.energy;
                hits.push_back(hj);
            }
            out["hits"] = hits;
            if (!trace_path.empty()) write_trace_csv(trace_path, res.path_summary, true);
        } else if (act->parsed()) {
            const ModelParams params = make_params(p, grid, dt, k_blow);
            if (instanton || instanton_h > 0.0) {
                const Equilibrium z = compute_z(params);
                const Path inst = build_instanton(z, 1e-3 * z.sup_norm, params);
                const ActionReport rep = path_action(inst, params);
                out["instanton_action"] = rep.action;
                out["instanton_lower_bound"] = rep.lower_bound;
                out["delta_barrier"] = 2.0 * z.energy;
                out["segments"] = rep.per_segment.size();
                if (instanton_h > 0.0) {
                    const Path esc = build_escape_path(z, instanton_h, params);
                    out["escape_action"] = path_action(esc, params).action;
                }
            } else if (!fields_path.empty()) {
                const Path phi = read_fields_csv(fields_path);
                const ActionReport rep = path_action(phi, params);
                out["action"] = rep.action;
                out["lower_bound"] = rep.lower_bound;
                out["segments"] = rep.per_segment.size();
                out["bound_satisfied"] = action_lower_bound_check(phi, params);
            } else {
                std::cerr << "action: need --path or --instanton\n";
                return 2;
            }
        } else if (ex->parsed()) {
            std::vector<std::string> all = overrides;
            all.push_back("experiment=" + exp_name);
            const ExperimentConfig config = parse_config(config_path, all);
            const ExperimentReport report = run_experiment(config);
            write_report(report, config.out_dir);
            out["out_dir"] = config.out_dir;
            out["passed"] = report.passed;
            out["assertions"] = report.aggregates["assertions"];
            std::cout << out.dump(2) << std::endl;
            return report.passed ? 0 : 1;
        }

        std::cout << out.dump(2) << std::endl;
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
