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

#include "sabkit/sabkit.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "sabkit/analytics.hpp"
#include "sabkit/config.hpp"
#include "sabkit/csv.hpp"
#include "sabkit/domain.hpp"
#include "sabkit/error.hpp"
#include "sabkit/estimators.hpp"
#include "sabkit/experiments.hpp"
#include "sabkit/simulator.hpp"

struct sabkit_dataset {
    std::vector<sabkit::Observation> records;
};

struct sabkit_simulation {
    sabkit::SimResult result;
};

namespace {

thread_local std::string g_last_error;

template <class F>
sabkit_status guarded(F&& f) {
    try {
        g_last_error.clear();
        f();
        return SABKIT_OK;
    } catch (const sabkit::NonIdentifiable& e) {
        g_last_error = e.what();
        return SABKIT_ERR_NONIDENTIFIABLE;
    } catch (const sabkit::InvalidArgument& e) {
        g_last_error = e.what();
        return SABKIT_ERR_INVALID;
    } catch (const sabkit::IoError& e) {
        g_last_error = e.what();
        return SABKIT_ERR_IO;
    } catch (const sabkit::NumericError& e) {
        g_last_error = e.what();
        return SABKIT_ERR_NUMERIC;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return SABKIT_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SABKIT_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return SABKIT_ERR_INTERNAL;
    }
}

template <class T>
void require(const T* p, const char* what) {
    if (p == nullptr) throw sabkit::InvalidArgument(std::string(what) + " must not be NULL");
}

sabkit::SimConfig to_cpp(const sabkit_sim_config& c) {
    sabkit::SimConfig s;
    s.lambda = c.lambda;
    s.theta = c.theta;
    s.q = c.q;
    s.n_slots = c.n_slots;
    s.mu_sr = c.mu_sr;
    s.mu_sab = c.mu_sab;
    s.horizon = c.horizon;
    s.warmup = c.warmup;
    s.seed = c.seed;
    return s;
}

sabkit_sim_config to_c(const sabkit::SimConfig& s) {
    return {s.lambda, s.theta, s.q, s.n_slots, s.mu_sr, s.mu_sab, s.horizon, s.warmup, s.seed};
}

sabkit_perf to_c(const sabkit::PerfMeasures& m) {
    return {m.p_wait, m.p_ab, m.e_queue, m.e_wait, m.e_wait_served, m.e_queue_true};
}

sabkit::InitKind to_cpp(sabkit_init i) {
    switch (i) {
        case SABKIT_INIT_ALL_SAB: return sabkit::InitKind::AllSab;
        case SABKIT_INIT_ALL_SR: return sabkit::InitKind::AllSr;
        case SABKIT_INIT_FIFTY_FIFTY: return sabkit::InitKind::FiftyFifty;
        case SABKIT_INIT_FROM_PI: return sabkit::InitKind::FromPi;
        case SABKIT_INIT_RANDOM: return sabkit::InitKind::RandomUniform;
    }
    throw sabkit::InvalidArgument("unknown initialization");
}

sabkit::M0Policy to_cpp(sabkit_m0_policy p) {
    switch (p) {
        case SABKIT_M0_SERVICE: return sabkit::M0Policy::AsService;
        case SABKIT_M0_KAB: return sabkit::M0Policy::AsKab;
        case SABKIT_M0_SAB: return sabkit::M0Policy::AsSab;
        case SABKIT_M0_THRESHOLD: return sabkit::M0Policy::PiThreshold;
    }
    throw sabkit::InvalidArgument("unknown m0 policy");
}

sabkit::ExperimentKind to_cpp(sabkit_experiment_kind k) {
    switch (k) {
        case SABKIT_EXPERIMENT_ACCURACY: return sabkit::ExperimentKind::Accuracy;
        case SABKIT_EXPERIMENT_SENSITIVITY: return sabkit::ExperimentKind::Sensitivity;
        case SABKIT_EXPERIMENT_ROBUSTNESS: return sabkit::ExperimentKind::Robustness;
        case SABKIT_EXPERIMENT_QUEUEFIT: return sabkit::ExperimentKind::QueueFit;
        case SABKIT_EXPERIMENT_SCENARIO: return sabkit::ExperimentKind::Scenario;
    }
    throw sabkit::InvalidArgument("unknown experiment kind");
}

}  // namespace

extern "C" {

const char* sabkit_last_error(void) { return g_last_error.c_str(); }

const char* sabkit_version(void) { return "1.0.0"; }

sabkit_status sabkit_dataset_read_csv(const char* path, double hours_per_unit,
                                      sabkit_dataset** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = nullptr;
        auto data = std::make_unique<sabkit_dataset>();
        data->records = sabkit::read_observations(path, hours_per_unit);
        *out = data.release();
    });
}

sabkit_status sabkit_dataset_write_csv(const sabkit_dataset* data, const char* path) {
    return guarded([&] {
        require(data, "data");
        require(path, "path");
        sabkit::write_observations(std::filesystem::path(path), data->records);
    });
}

sabkit_status sabkit_dataset_size(const sabkit_dataset* data, size_t* out) {
    return guarded([&] {
        require(data, "data");
        require(out, "out");
        *out = data->records.size();
    });
}

sabkit_status sabkit_dataset_uncertain(const sabkit_dataset* data, size_t* out) {
    return guarded([&] {
        require(data, "data");
        require(out, "out");
        size_t n = 0;
        for (const auto& o : data->records) n += o.is_uncertain() ? 1 : 0;
        *out = n;
    });
}

void sabkit_dataset_free(sabkit_dataset* data) { delete data; }

sabkit_status sabkit_sample_iid(double theta, double gamma, double q, size_t n_records,
                                uint64_t seed, sabkit_dataset** out) {
    return guarded([&] {
        require(out, "out");
        *out = nullptr;
        const auto labeled = sabkit::sample_iid(theta, gamma, q, n_records, seed);
        auto data = std::make_unique<sabkit_dataset>();
        data->records.reserve(labeled.size());
        for (const auto& l : labeled) data->records.push_back(l.obs);
        *out = data.release();
    });
}

sabkit_status sabkit_mask(const sabkit_dataset* complete, double p_ss, uint64_t seed,
                          sabkit_dataset** out) {
    return guarded([&] {
        require(complete, "complete");
        require(out, "out");
        *out = nullptr;
        std::vector<sabkit::LabeledObservation> labeled;
        labeled.reserve(complete->records.size());
        for (const auto& o : complete->records)
            labeled.push_back({o, sabkit::classify_complete(o)});
        auto data = std::make_unique<sabkit_dataset>();
        data->records = sabkit::mask(labeled, p_ss, seed);
        *out = data.release();
    });
}

void sabkit_fit_options_default(sabkit_fit_options* options) {
    if (options == nullptr) return;
    options->method = SABKIT_METHOD_EM;
    options->m0_policy = SABKIT_M0_SERVICE;
    options->pi_threshold = 0.5;
    options->init = SABKIT_INIT_RANDOM;
    options->epsilon = 1e-6;
    options->max_iters = 10000;
    options->seed = 1;
}

sabkit_status sabkit_estimate(const sabkit_dataset* data, const sabkit_fit_options* options,
                              sabkit_fit_result* out) {
    return guarded([&] {
        require(data, "data");
        require(options, "options");
        require(out, "out");
        const auto& obs = data->records;
        if (obs.empty()) throw sabkit::InvalidArgument("dataset is empty");
        sabkit::ParamSet p;
        size_t iterations = 1;
        bool converged = true;
        switch (options->method) {
            case SABKIT_METHOD_EM: {
                sabkit::EmConfig cfg;
                cfg.epsilon = options->epsilon;
                cfg.max_iters = options->max_iters;
                cfg.init = {to_cpp(options->init), options->seed};
                const auto trace = sabkit::em_fit(obs, cfg);
                p = trace.final;
                iterations = trace.passes();
                converged = trace.converged;
                break;
            }
            case SABKIT_METHOD_M1:
                p = sabkit::method1_fit(obs, to_cpp(options->m0_policy));
                break;
            case SABKIT_METHOD_M2:
                p = sabkit::method2_fit(obs, {to_cpp(options->m0_policy), options->pi_threshold});
                break;
            default:
                throw sabkit::InvalidArgument("unknown method");
        }
        *out = {p.theta,   p.q, p.gamma, iterations, converged ? 1 : 0,
                sabkit::observed_loglik(obs, p)};
    });
}

sabkit_status sabkit_format_fit_row(const char* method, const sabkit_fit_result* fit, char* buf,
                                    size_t size, size_t* needed) {
    return guarded([&] {
        require(method, "method");
        require(fit, "fit");
        const std::string row = sabkit::format_fit_row(
            method, {fit->theta, fit->q, fit->gamma}, fit->iterations, fit->converged != 0,
            fit->loglik);
        if (needed) *needed = row.size();
        if (buf != nullptr && size > 0) {
            const size_t n = std::min(size - 1, row.size());
            std::memcpy(buf, row.data(), n);
            buf[n] = '\0';
        }
    });
}

void sabkit_sim_config_default(sabkit_sim_config* config) {
    if (config != nullptr) *config = to_c(sabkit::SimConfig{});
}

sabkit_status sabkit_sim_config_read(const char* path, sabkit_sim_config* config,
                                     size_t* replications, double* p_ss) {
    return guarded([&] {
        require(path, "path");
        require(config, "config");
        const auto cfg = sabkit::read_scenario_config(path);
        *config = to_c(cfg.sim);
        if (replications) *replications = cfg.replications;
        if (p_ss) *p_ss = cfg.p_ss ? *cfg.p_ss : NAN;
    });
}

sabkit_status sabkit_simulate(const sabkit_sim_config* config, sabkit_simulation** out) {
    return guarded([&] {
        require(config, "config");
        require(out, "out");
        *out = nullptr;
        auto sim = std::make_unique<sabkit_simulation>();
        sim->result = sabkit::simulate(to_cpp(*config));
        *out = sim.release();
    });
}

sabkit_status sabkit_simulation_perf(const sabkit_simulation* sim, sabkit_perf* out) {
    return guarded([&] {
        require(sim, "sim");
        require(out, "out");
        *out = to_c(sim->result.measures);
    });
}

sabkit_status sabkit_simulation_size(const sabkit_simulation* sim, size_t* out) {
    return guarded([&] {
        require(sim, "sim");
        require(out, "out");
        *out = sim->result.records.size();
    });
}

sabkit_status sabkit_simulation_write_records(const sabkit_simulation* sim, const char* path) {
    return guarded([&] {
        require(sim, "sim");
        require(path, "path");
        auto out = sabkit::open_output(path);
        sabkit::write_records(out, sim->result.records);
    });
}

sabkit_status sabkit_simulation_observations(const sabkit_simulation* sim,
                                             sabkit_extract_mode mode, double p_ss,
                                             uint64_t seed, sabkit_dataset** out) {
    return guarded([&] {
        require(sim, "sim");
        require(out, "out");
        *out = nullptr;
        sabkit::ExtractMode m;
        switch (mode) {
            case SABKIT_EXTRACT_COMPLETE: m = sabkit::ExtractMode::complete(); break;
            case SABKIT_EXTRACT_MASKED: m = sabkit::ExtractMode::masked(p_ss, seed); break;
            case SABKIT_EXTRACT_BY_INDICATION: m = sabkit::ExtractMode::by_indication(); break;
            default: throw sabkit::InvalidArgument("unknown extract mode");
        }
        auto data = std::make_unique<sabkit_dataset>();
        data->records = sabkit::extract_observations(sim->result.records, m);
        *out = data.release();
    });
}

void sabkit_simulation_free(sabkit_simulation* sim) { delete sim; }

sabkit_status sabkit_write_perf_csv(const char* path, size_t replication, const sabkit_perf* perf,
                                    int append) {
    return guarded([&] {
        require(path, "path");
        require(perf, "perf");
        const bool fresh = !append || !std::filesystem::exists(path);
        std::ofstream out(path, fresh ? std::ios::binary : std::ios::binary | std::ios::app);
        if (!out) throw sabkit::IoError(std::string("cannot write ") + path);
        if (fresh) out << sabkit::kPerfHeader << '\n';
        sabkit::write_perf_row(out, replication,
                               {perf->p_wait, perf->p_ab, perf->e_queue, perf->e_wait,
                                perf->e_wait_served, perf->e_queue_true});
    });
}

sabkit_status sabkit_erlang_a(double lambda, double mu, double theta, size_t n_slots,
                              sabkit_perf* out) {
    return guarded([&] {
        require(out, "out");
        *out = to_c(sabkit::erlang_a_oracle(lambda, mu, theta, n_slots));
    });
}

sabkit_status sabkit_effort(const sabkit_effort_segment* segments, size_t count, double* out) {
    return guarded([&] {
        require(out, "out");
        if (count > 0) require(segments, "segments");
        std::vector<sabkit::EffortSegment> s;
        for (size_t i = 0; i < count; ++i)
            s.push_back({segments[i].share, segments[i].los, segments[i].work_fraction,
                         segments[i].is_sab != 0});
        *out = sabkit::effort(s);
    });
}

sabkit_status sabkit_scope_report(double p_kab, double p_m0, double pi_bar, double* p_ab_total,
                                  double* sab_share) {
    return guarded([&] {
        require(p_ab_total, "p_ab_total");
        require(sab_share, "sab_share");
        const auto r = sabkit::scope_report(p_kab, p_m0, pi_bar);
        *p_ab_total = r.p_ab_total;
        *sab_share = r.sab_share;
    });
}

sabkit_status sabkit_q_from_proportions(double p_c2, double p_m0, double p_c3_given_m0,
                                        double* out) {
    return guarded([&] {
        require(out, "out");
        *out = sabkit::q_from_proportions(p_c2, p_m0, p_c3_given_m0);
    });
}

sabkit_status sabkit_experiment_spec_default(sabkit_experiment_kind kind,
                                             sabkit_experiment_spec* spec) {
    return guarded([&] {
        require(spec, "spec");
        const auto d = sabkit::ExperimentSpec::defaults(to_cpp(kind));
        *spec = {};
        spec->kind = kind;
        spec->replications = d.replications;
        spec->sample_size = d.sample_size;
        spec->partitions = d.partitions;
        spec->restarts = d.restarts;
        spec->threads = d.threads;
        spec->seed = d.seed;
        spec->p_ss = NAN;
        spec->hours_per_unit = d.hours_per_unit;
        spec->segment_hours = d.queuefit.segment_hours;
    });
}

sabkit_status sabkit_run_experiment(const sabkit_experiment_spec* spec) {
    return guarded([&] {
        require(spec, "spec");
        auto s = sabkit::ExperimentSpec::defaults(to_cpp(spec->kind));
        s.replications = spec->replications;
        s.sample_size = spec->sample_size;
        s.partitions = spec->partitions;
        s.restarts = spec->restarts;
        s.threads = spec->threads;
        s.seed = spec->seed;
        if (!std::isnan(spec->p_ss)) s.p_ss = spec->p_ss;
        s.hours_per_unit = spec->hours_per_unit;
        s.queuefit.segment_hours = spec->segment_hours;
        if (spec->output_dir) s.output_dir = spec->output_dir;
        if (spec->input_path) s.input_path = spec->input_path;
        if (spec->config_path) s.config_path = spec->config_path;
        if (spec->grid != nullptr) {
            s.grid.clear();
            for (size_t i = 0; i < spec->grid_size; ++i)
                s.grid.push_back({spec->grid[i].theta, spec->grid[i].q, spec->grid[i].gamma});
        }
        if (s.output_dir.empty()) throw sabkit::InvalidArgument("output_dir is required");
        switch (s.kind) {
            case sabkit::ExperimentKind::Accuracy: sabkit::run_accuracy(s); break;
            case sabkit::ExperimentKind::Sensitivity: sabkit::run_sensitivity(s); break;
            case sabkit::ExperimentKind::Robustness: sabkit::run_robustness(s); break;
            case sabkit::ExperimentKind::QueueFit: sabkit::run_queuefit(s); break;
            case sabkit::ExperimentKind::Scenario: sabkit::run_scenario(s); break;
        }
    });
}

}  // extern "C"
