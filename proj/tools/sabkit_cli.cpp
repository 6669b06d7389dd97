/*
 * Copyright 2026 The sabkit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end. Talks to the library only through the C API.

#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sabkit/sabkit.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitNonIdentifiable = 2;

struct Failed {
    int code;
};

void check(sabkit_status s) {
    if (s == SABKIT_OK) return;
    std::fprintf(stderr, "sabkit: %s\n", sabkit_last_error());
    throw Failed{s == SABKIT_ERR_NONIDENTIFIABLE ? kExitNonIdentifiable : kExitInvalid};
}

[[noreturn]] void usage_error(const std::string& msg) {
    std::fprintf(stderr, "sabkit: %s\n", msg.c_str());
    throw Failed{kExitInvalid};
}

struct DatasetDeleter {
    void operator()(sabkit_dataset* d) const { sabkit_dataset_free(d); }
};
struct SimulationDeleter {
    void operator()(sabkit_simulation* s) const { sabkit_simulation_free(s); }
};
using Dataset = std::unique_ptr<sabkit_dataset, DatasetDeleter>;
using Simulation = std::unique_ptr<sabkit_simulation, SimulationDeleter>;

Dataset load(const std::string& path, double hours_per_unit) {
    sabkit_dataset* d = nullptr;
    check(sabkit_dataset_read_csv(path.c_str(), hours_per_unit, &d));
    return Dataset(d);
}

double unit_hours(const std::string& unit) {
    if (unit == "hours") return 1.0;
    if (unit == "minutes") return 1.0 / 60.0;
    return 1.0 / 3600.0;
}

std::string number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void print_perf(const sabkit_perf& p) {
    std::printf("p_wait,p_ab,e_queue,e_wait,e_wait_served,e_queue_true\n%s,%s,%s,%s,%s,%s\n",
                number(p.p_wait).c_str(), number(p.p_ab).c_str(), number(p.e_queue).c_str(),
                number(p.e_wait).c_str(), number(p.e_wait_served).c_str(),
                number(p.e_queue_true).c_str());
}

// Parses "share,los,work_fraction,sab|served".
sabkit_effort_segment parse_segment(const std::string& text) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    if (parts.size() != 4 || (parts[3] != "sab" && parts[3] != "served"))
        usage_error("segment must look like share,los,work_fraction,sab|served: " + text);
    try {
        return {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2]),
                parts[3] == "sab" ? 1 : 0};
    } catch (const std::exception&) {
        usage_error("segment has a non-numeric field: " + text);
    }
}

// Parses "theta:q:gamma".
sabkit_grid_point parse_grid_point(const std::string& text) {
    double t = 0, q = 0, g = 0;
    char tail = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf%c", &t, &q, &g, &tail) != 3)
        usage_error("grid point must look like theta:q:gamma: " + text);
    return {t, q, g};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Patience estimation and queue simulation with silent abandonment"};
    app.require_subcommand(1);
    app.fallthrough();

    std::uint64_t seed = 1;
    std::string out;
    std::string units = "hours";
    app.add_option("--seed", seed, "Base random seed");
    app.add_option("--out", out, "Output file (or directory for experiments)");
    app.add_option("--units", units, "Unit of the u column in input files")
        ->check(CLI::IsMember({"hours", "minutes", "seconds"}));

    // sample
    auto* sample = app.add_subcommand("sample", "Draw i.i.d. complete records");
    double s_theta = 4, s_gamma = 10, s_q = 0.5;
    std::size_t s_n = 2000;
    sample->add_option("--theta", s_theta, "Patience rate per hour");
    sample->add_option("--gamma", s_gamma, "Virtual-wait rate per hour");
    sample->add_option("--q", s_q, "Indication probability");
    sample->add_option("-n,--records", s_n, "Number of records");

    // mask
    auto* maskc = app.add_subcommand("mask", "Hide delta on silent abandonments and short service");
    std::string m_input;
    double m_pss = 0.15;
    maskc->add_option("input", m_input, "Complete observation CSV")->required();
    maskc->add_option("--p-ss", m_pss, "Probability a served record looks like short service");

    // simulate
    auto* simc = app.add_subcommand("simulate", "Simulate the queue with silent abandonment");
    sabkit_sim_config sim;
    sabkit_sim_config_default(&sim);
    std::string sim_config, sim_obs, sim_perf, sim_mask = "indication";
    bool sab_instant = false;
    simc->add_option("--config", sim_config, "Scenario file (flags below override it)");
    auto* o_lambda = simc->add_option("--lambda", sim.lambda, "Arrival rate per hour");
    auto* o_theta = simc->add_option("--theta", sim.theta, "Patience rate per hour");
    auto* o_q = simc->add_option("--q", sim.q, "Indication probability");
    auto* o_n = simc->add_option("--slots", sim.n_slots, "Service slots");
    auto* o_musr = simc->add_option("--mu-sr", sim.mu_sr, "Service rate of served customers");
    auto* o_musab = simc->add_option("--mu-sab", sim.mu_sab, "Service rate of silent abandonments");
    simc->add_flag("--sab-instant", sab_instant, "Silent abandonments release their slot at once");
    auto* o_h = simc->add_option("--horizon", sim.horizon, "Simulated hours");
    auto* o_w = simc->add_option("--warmup", sim.warmup, "Warm-up hours");
    simc->add_option("--observations", sim_obs, "Also write extracted observations here");
    simc->add_option("--mask", sim_mask, "complete, indication, or a short-service probability");
    simc->add_option("--perf", sim_perf, "Append the performance measures to this CSV");

    // estimate
    auto* est = app.add_subcommand("estimate", "Estimate patience from an observation CSV");
    std::string e_input, e_method = "em", e_policy = "service", e_init = "random";
    double e_threshold = 0.5, e_eps = 1e-6;
    std::size_t e_iters = 10000;
    est->add_option("input", e_input, "Observation CSV")->required();
    est->add_option("--method", e_method, "em, m1 or m2")
        ->check(CLI::IsMember({"em", "m1", "m2"}));
    est->add_option("--m0-policy", e_policy, "Uncertain records for m1/m2: service, kab, sab, threshold")
        ->check(CLI::IsMember({"service", "kab", "sab", "threshold"}));
    est->add_option("--threshold", e_threshold, "pi threshold for --m0-policy threshold");
    est->add_option("--init", e_init, "EM start: all-sab, all-sr, fifty-fifty, from-pi, random")
        ->check(CLI::IsMember({"all-sab", "all-sr", "fifty-fifty", "from-pi", "random"}));
    est->add_option("--epsilon", e_eps, "EM convergence threshold");
    est->add_option("--max-iters", e_iters, "EM iteration cap");

    // effort
    auto* eff = app.add_subcommand("effort", "Share of agent work time spent on silent abandonment");
    std::vector<std::string> segments;
    eff->add_option("--segment", segments, "share,los_minutes,work_fraction,sab|served")
        ->required();

    // scope
    auto* scope = app.add_subcommand("scope", "Total abandonment and its silent share");
    double p_kab = 0, p_m0 = 0, pi_bar = 0;
    scope->add_option("--p-kab", p_kab, "Known-abandonment proportion")->required();
    scope->add_option("--p-m0", p_m0, "Uncertain proportion")->required();
    scope->add_option("--pi-bar", pi_bar, "Mean silent-abandonment probability among uncertain")
        ->required();

    // qdecomp
    auto* qd = app.add_subcommand("qdecomp", "Indication probability from observed proportions");
    double p_c2 = 0, qd_m0 = 0, p_c3 = 0;
    qd->add_option("--p-c2", p_c2, "Known-abandonment proportion")->required();
    qd->add_option("--p-m0", qd_m0, "Uncertain proportion")->required();
    qd->add_option("--p-c3-given-m0", p_c3, "Silent share of uncertain records")->required();

    // erlang-a
    auto* erl = app.add_subcommand("erlang-a", "Steady-state M/M/n+M measures");
    double ea_lambda = 0, ea_mu = 0, ea_theta = 0;
    std::size_t ea_n = 1;
    erl->add_option("--lambda", ea_lambda, "Arrival rate")->required();
    erl->add_option("--mu", ea_mu, "Service rate")->required();
    erl->add_option("--theta", ea_theta, "Patience rate")->required();
    erl->add_option("--slots", ea_n, "Service slots")->required();

    // experiment
    auto* exp = app.add_subcommand("experiment", "Run a scripted study and write CSV artifacts");
    std::string x_kind;
    std::size_t x_reps = 0, x_size = 0, x_restarts = 0, x_parts = 0, x_threads = 0;
    double x_pss = NAN, x_segment = 0;
    std::string x_input, x_config;
    std::vector<std::string> x_grid;
    exp->add_option("kind", x_kind, "accuracy, sensitivity, robustness, queuefit, scenario")
        ->required()
        ->check(CLI::IsMember({"accuracy", "sensitivity", "robustness", "queuefit", "scenario"}));
    auto* o_reps = exp->add_option("--replications", x_reps, "Replications");
    auto* o_size = exp->add_option("--sample-size", x_size, "Records per replication");
    auto* o_restarts = exp->add_option("--restarts", x_restarts, "Random EM starts per fit");
    auto* o_parts = exp->add_option("--partitions", x_parts, "Robustness subsamples");
    exp->add_option("--threads", x_threads, "Worker threads (0: all cores)");
    exp->add_option("--p-ss", x_pss, "Short-service masking probability (default 1 - q)");
    exp->add_option("--input", x_input, "Observation CSV (robustness, sensitivity)");
    exp->add_option("--config", x_config, "Scenario file");
    auto* o_segment = exp->add_option("--segment-hours", x_segment, "Queue-fit hours per segment");
    exp->add_option("--grid", x_grid, "theta:q:gamma grid point (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    const double hpu = unit_hours(units);
    try {
        if (*sample) {
            if (out.empty()) usage_error("--out is required");
            sabkit_dataset* d = nullptr;
            check(sabkit_sample_iid(s_theta, s_gamma, s_q, s_n, seed, &d));
            Dataset data(d);
            check(sabkit_dataset_write_csv(data.get(), out.c_str()));
        } else if (*maskc) {
            if (out.empty()) usage_error("--out is required");
            Dataset complete = load(m_input, hpu);
            sabkit_dataset* d = nullptr;
            check(sabkit_mask(complete.get(), m_pss, seed, &d));
            Dataset masked(d);
            check(sabkit_dataset_write_csv(masked.get(), out.c_str()));
        } else if (*simc) {
            if (!sim_config.empty()) {
                sabkit_sim_config file;
                check(sabkit_sim_config_read(sim_config.c_str(), &file, nullptr, nullptr));
                if (!*o_lambda) sim.lambda = file.lambda;
                if (!*o_theta) sim.theta = file.theta;
                if (!*o_q) sim.q = file.q;
                if (!*o_n) sim.n_slots = file.n_slots;
                if (!*o_musr) sim.mu_sr = file.mu_sr;
                if (!*o_musab) sim.mu_sab = file.mu_sab;
                if (!*o_h) sim.horizon = file.horizon;
                if (!*o_w) sim.warmup = file.warmup;
            }
            if (sab_instant) sim.mu_sab = INFINITY;
            sim.seed = seed;
            sabkit_simulation* s = nullptr;
            check(sabkit_simulate(&sim, &s));
            Simulation run(s);
            if (!out.empty()) check(sabkit_simulation_write_records(run.get(), out.c_str()));
            sabkit_perf perf;
            check(sabkit_simulation_perf(run.get(), &perf));
            print_perf(perf);
            if (!sim_perf.empty()) check(sabkit_write_perf_csv(sim_perf.c_str(), 0, &perf, 1));
            if (!sim_obs.empty()) {
                sabkit_extract_mode mode = SABKIT_EXTRACT_BY_INDICATION;
                double p = 0.0;
                if (sim_mask == "complete") {
                    mode = SABKIT_EXTRACT_COMPLETE;
                } else if (sim_mask != "indication") {
                    mode = SABKIT_EXTRACT_MASKED;
                    try {
                        p = std::stod(sim_mask);
                    } catch (const std::exception&) {
                        usage_error("--mask must be complete, indication or a probability");
                    }
                }
                sabkit_dataset* d = nullptr;
                check(sabkit_simulation_observations(run.get(), mode, p, seed + 1, &d));
                Dataset data(d);
                check(sabkit_dataset_write_csv(data.get(), sim_obs.c_str()));
            }
        } else if (*est) {
            Dataset data = load(e_input, hpu);
            sabkit_fit_options opt;
            sabkit_fit_options_default(&opt);
            opt.method = e_method == "em" ? SABKIT_METHOD_EM
                         : e_method == "m1" ? SABKIT_METHOD_M1
                                            : SABKIT_METHOD_M2;
            static const std::map<std::string, sabkit_m0_policy> policies = {
                {"service", SABKIT_M0_SERVICE},
                {"kab", SABKIT_M0_KAB},
                {"sab", SABKIT_M0_SAB},
                {"threshold", SABKIT_M0_THRESHOLD}};
            static const std::map<std::string, sabkit_init> inits = {
                {"all-sab", SABKIT_INIT_ALL_SAB},
                {"all-sr", SABKIT_INIT_ALL_SR},
                {"fifty-fifty", SABKIT_INIT_FIFTY_FIFTY},
                {"from-pi", SABKIT_INIT_FROM_PI},
                {"random", SABKIT_INIT_RANDOM}};
            opt.m0_policy = policies.at(e_policy);
            opt.init = inits.at(e_init);
            opt.pi_threshold = e_threshold;
            opt.epsilon = e_eps;
            opt.max_iters = e_iters;
            opt.seed = seed;
            sabkit_fit_result fit;
            check(sabkit_estimate(data.get(), &opt, &fit));
            std::string label = e_method;
            if (e_method != "em") label += "-" + e_policy;
            char row[512];
            check(sabkit_format_fit_row(label.c_str(), &fit, row, sizeof row, nullptr));
            std::printf("method,theta,q,gamma,iterations,converged,loglik\n%s\n", row);
            if (!fit.converged) std::fprintf(stderr, "sabkit: EM did not converge\n");
        } else if (*eff) {
            std::vector<sabkit_effort_segment> segs;
            for (const auto& s : segments) segs.push_back(parse_segment(s));
            double value = 0;
            check(sabkit_effort(segs.data(), segs.size(), &value));
            std::printf("effort\n%s\n", number(value).c_str());
        } else if (*scope) {
            double total = 0, share = 0;
            check(sabkit_scope_report(p_kab, p_m0, pi_bar, &total, &share));
            std::printf("p_ab_total,sab_share\n%s,%s\n", number(total).c_str(),
                        number(share).c_str());
        } else if (*qd) {
            double q = 0;
            check(sabkit_q_from_proportions(p_c2, qd_m0, p_c3, &q));
            std::printf("q\n%s\n", number(q).c_str());
        } else if (*erl) {
            sabkit_perf perf;
            check(sabkit_erlang_a(ea_lambda, ea_mu, ea_theta, ea_n, &perf));
            print_perf(perf);
        } else if (*exp) {
            static const std::map<std::string, sabkit_experiment_kind> kinds = {
                {"accuracy", SABKIT_EXPERIMENT_ACCURACY},
                {"sensitivity", SABKIT_EXPERIMENT_SENSITIVITY},
                {"robustness", SABKIT_EXPERIMENT_ROBUSTNESS},
                {"queuefit", SABKIT_EXPERIMENT_QUEUEFIT},
                {"scenario", SABKIT_EXPERIMENT_SCENARIO}};
            if (out.empty()) usage_error("--out (output directory) is required");
            sabkit_experiment_spec spec;
            check(sabkit_experiment_spec_default(kinds.at(x_kind), &spec));
            if (*o_reps) spec.replications = x_reps;
            if (*o_size) spec.sample_size = x_size;
            if (*o_restarts) spec.restarts = x_restarts;
            if (*o_parts) spec.partitions = x_parts;
            if (*o_segment) spec.segment_hours = x_segment;
            spec.threads = x_threads;
            spec.seed = seed;
            spec.p_ss = x_pss;
            spec.hours_per_unit = hpu;
            spec.output_dir = out.c_str();
            spec.input_path = x_input.empty() ? nullptr : x_input.c_str();
            spec.config_path = x_config.empty() ? nullptr : x_config.c_str();
            std::vector<sabkit_grid_point> grid;
            for (const auto& g : x_grid) grid.push_back(parse_grid_point(g));
            if (!grid.empty()) {
                spec.grid = grid.data();
                spec.grid_size = grid.size();
            }
            check(sabkit_run_experiment(&spec));
        }
    } catch (const Failed& f) {
        return f.code;
    }
    return kExitOk;
}
