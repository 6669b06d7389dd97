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

#include "sabkit/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

#include "numeric.hpp"
#include "sabkit/csv.hpp"
#include "sabkit/error.hpp"
#include "sabkit/random.hpp"

namespace sabkit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs fn(0..count-1) on a small worker pool. The first exception escaping fn
// is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, count);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count || stop.load()) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                stop.store(true);
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
}

// Collects estimates and failures of one replication.
struct Slot {
    std::vector<Estimate> estimates;
    std::vector<Failure> failures;

    template <class Fit>
    void attempt(std::size_t grid, std::size_t rep, std::string_view method, Fit&& fit) {
        try {
            Estimate e = fit();
            e.grid = grid;
            e.replication = rep;
            e.method = std::string(method);
            estimates.push_back(std::move(e));
        } catch (const Error& err) {
            failures.push_back({grid, rep, std::string(method), err.what()});
        }
    }
};

Estimate plain(const ParamSet& p) { return Estimate{0, 0, {}, p, 1, true}; }

Estimate from_restarts(const RestartSummary& s) {
    return Estimate{0, 0, {}, s.mean, s.total_passes, s.all_converged};
}

std::vector<MethodSummary> summarize(std::span<const Estimate> estimates,
                                     std::span<const std::string_view> order,
                                     const std::optional<ParamSet>& truth, bool gamma_known) {
    std::vector<MethodSummary> out;
    for (std::string_view method : order) {
        MethodSummary s;
        s.method = std::string(method);
        detail::Sum t, q, g, et, eq, eg;
        for (const auto& e : estimates) {
            if (e.method != method) continue;
            ++s.n_ok;
            t.add(e.params.theta);
            q.add(e.params.q);
            g.add(e.params.gamma);
            if (truth) {
                et.add((e.params.theta - truth->theta) * (e.params.theta - truth->theta));
                eq.add((e.params.q - truth->q) * (e.params.q - truth->q));
                eg.add((e.params.gamma - truth->gamma) * (e.params.gamma - truth->gamma));
            }
        }
        if (s.n_ok > 0) {
            const double n = static_cast<double>(s.n_ok);
            s.mean = {t.value() / n, q.value() / n, g.value() / n};
            s.mse_theta = truth ? et.value() / n : kNaN;
            s.mse_q = truth ? eq.value() / n : kNaN;
            s.mse_gamma = truth && gamma_known ? eg.value() / n : kNaN;
        } else {
            s.mean = {kNaN, kNaN, kNaN};
            s.mse_theta = s.mse_q = s.mse_gamma = kNaN;
        }
        out.push_back(std::move(s));
    }
    return out;
}

void merge(std::vector<Slot>& slots, std::vector<Estimate>& estimates,
           std::vector<Failure>& failures) {
    for (auto& s : slots) {
        std::move(s.estimates.begin(), s.estimates.end(), std::back_inserter(estimates));
        std::move(s.failures.begin(), s.failures.end(), std::back_inserter(failures));
    }
}

bool writes(const ExperimentSpec& spec) { return !spec.output_dir.empty(); }

void write_failures(const ExperimentSpec& spec, std::span<const Failure> failures) {
    auto out = open_output(spec.output_dir / "failures.csv");
    out << "grid,replication,method,error\n";
    for (const auto& f : failures) {
        std::string msg = f.message;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        out << f.grid << ',' << f.replication << ',' << f.method << ',' << msg << '\n';
    }
}

void write_estimates(const std::filesystem::path& path, std::span<const Estimate> estimates,
                     std::span<const ParamSet> truths) {
    auto out = open_output(path);
    out << "grid,theta_true,q_true,gamma_true,replication,method,theta,q,gamma,iterations,"
           "converged\n";
    for (const auto& e : estimates) {
        const ParamSet t = e.grid < truths.size() ? truths[e.grid] : ParamSet{kNaN, kNaN, kNaN};
        out << e.grid << ',' << format_number(t.theta) << ',' << format_number(t.q) << ','
            << format_number(t.gamma) << ',' << e.replication << ',' << e.method << ','
            << format_number(e.params.theta) << ',' << format_number(e.params.q) << ','
            << format_number(e.params.gamma) << ',' << e.iterations << ','
            << (e.converged ? 1 : 0) << '\n';
    }
}

void write_summary_row(std::ostream& out, const MethodSummary& s) {
    out << s.method << ',' << s.n_ok << ',' << format_number(s.mean.theta) << ','
        << format_number(s.mean.q) << ',' << format_number(s.mean.gamma) << ','
        << format_number(mean_patience_minutes(s.mean.theta)) << ','
        << format_number(s.mse_theta) << ',' << format_number(s.mse_q) << ','
        << format_number(s.mse_gamma) << '\n';
}

constexpr std::string_view kSummaryColumns =
    "method,n_ok,mean_theta,mean_q,mean_gamma,mean_patience_min,mse_theta,mse_q,mse_gamma";

double masking_rate(const ExperimentSpec& spec, double q) {
    return spec.p_ss ? *spec.p_ss : 1.0 - q;
}

std::string fmt_mu(double mu) {
    return mu == SimConfig::kInstantaneous ? std::string("inf") : format_number(mu);
}

// Deterministic Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    return idx;
}

PerfMeasures average(std::span<const PerfMeasures> runs) {
    PerfMeasures m;
    if (runs.empty()) return m;
    for (const auto& r : runs) {
        m.p_wait += r.p_wait;
        m.p_ab += r.p_ab;
        m.e_queue += r.e_queue;
        m.e_wait += r.e_wait;
        m.e_wait_served += r.e_wait_served;
        m.e_queue_true += r.e_queue_true;
    }
    const double n = static_cast<double>(runs.size());
    m.p_wait /= n;
    m.p_ab /= n;
    m.e_queue /= n;
    m.e_wait /= n;
    m.e_wait_served /= n;
    m.e_queue_true /= n;
    return m;
}

}  // namespace

std::string_view to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Accuracy: return "accuracy";
        case ExperimentKind::Sensitivity: return "sensitivity";
        case ExperimentKind::Robustness: return "robustness";
        case ExperimentKind::QueueFit: return "queuefit";
        case ExperimentKind::Scenario: return "scenario";
    }
    return "?";
}

ExperimentKind parse_experiment_kind(std::string_view s) {
    for (auto k : {ExperimentKind::Accuracy, ExperimentKind::Sensitivity,
                   ExperimentKind::Robustness, ExperimentKind::QueueFit,
                   ExperimentKind::Scenario})
        if (to_string(k) == s) return k;
    throw InvalidArgument("unknown experiment '" + std::string(s) + "'");
}

ExperimentSpec ExperimentSpec::defaults(ExperimentKind kind) {
    ExperimentSpec spec;
    spec.kind = kind;
    switch (kind) {
        case ExperimentKind::Accuracy:
            for (double q : {1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1})
                spec.grid.push_back({4.0, q, 10.0});
            for (double gamma : {9.0, 7.0, 5.0, 4.1}) spec.grid.push_back({4.0, 0.1, gamma});
            break;
        case ExperimentKind::Sensitivity:
            spec.grid.push_back({4.0, 0.5, 10.0});
            break;
        case ExperimentKind::Robustness:
            spec.restarts = 100;
            break;
        case ExperimentKind::QueueFit:
            spec.replications = 1;
            break;
        case ExperimentKind::Scenario:
            spec.replications = 0;
            break;
    }
    return spec;
}

void ExperimentSpec::check() const {
    const bool scenario = kind == ExperimentKind::Scenario;
    if (replications < 1 && !scenario) throw InvalidArgument("replications must be at least 1");
    if (restarts < 1) throw InvalidArgument("restarts must be at least 1");
    if (p_ss && !(*p_ss >= 0.0 && *p_ss <= 1.0))
        throw InvalidArgument("p_ss must lie in [0, 1]");
    switch (kind) {
        case ExperimentKind::Accuracy:
        case ExperimentKind::Sensitivity:
            if (kind == ExperimentKind::Accuracy || input_path.empty()) {
                if (grid.empty()) throw InvalidArgument("parameter grid is empty");
                if (sample_size < 1) throw InvalidArgument("sample_size must be at least 1");
                for (const auto& p : grid) p.check();
            }
            if (!(classifier_sensitivity >= 0.0 && classifier_sensitivity <= 1.0) ||
                !(classifier_specificity >= 0.0 && classifier_specificity <= 1.0))
                throw InvalidArgument("classifier rates must lie in [0, 1]");
            break;
        case ExperimentKind::Robustness:
            if (input_path.empty()) throw InvalidArgument("robustness needs an input dataset");
            if (partitions < 1) throw InvalidArgument("partitions must be at least 1");
            break;
        case ExperimentKind::QueueFit: {
            const auto& s = queuefit;
            if (s.lambdas.empty()) throw InvalidArgument("queue-fit needs at least one segment");
            if (!(s.segment_hours > 0.0)) throw InvalidArgument("segment_hours must be positive");
            break;
        }
        case ExperimentKind::Scenario:
            if (config_path.empty()) throw InvalidArgument("scenario needs a config file");
            break;
    }
}

const MethodSummary& find_method(std::span<const MethodSummary> methods, std::string_view id) {
    for (const auto& m : methods)
        if (m.method == id) return m;
    throw InvalidArgument("no summary for method '" + std::string(id) + "'");
}

double QueueFitResult::rmse_of(std::string_view model, Measure m) const {
    for (const auto& r : rmse)
        if (r.model == model && r.measure == m) return r.rmse;
    throw InvalidArgument("no RMSE for model '" + std::string(model) + "'");
}

std::vector<Observation> attach_classifier_scores(std::span<const LabeledObservation> truth,
                                                  std::span<const Observation> masked,
                                                  double sensitivity, double specificity,
                                                  std::uint64_t seed) {
    if (truth.size() != masked.size())
        throw InvalidArgument("classifier input lengths differ");
    Rng rng(seed);
    std::vector<Observation> out;
    out.reserve(masked.size());
    for (std::size_t i = 0; i < masked.size(); ++i) {
        const double draw = rng.uniform();
        const Observation& o = masked[i];
        if (!o.is_uncertain()) {
            out.push_back(o);
            continue;
        }
        const bool silent = truth[i].cls == CompleteClass::SilentAbandonment;
        const bool flagged = silent ? draw < sensitivity : draw >= specificity;
        out.push_back(Observation::make(o.u(), false, Delta::Missing, flagged ? 1.0 : 0.0));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Accuracy
// ---------------------------------------------------------------------------

AccuracyResult run_accuracy(const ExperimentSpec& spec) {
    spec.check();
    const std::size_t cells = spec.grid.size();
    std::vector<Slot> slots(cells * spec.replications);

    parallel_for(slots.size(), spec.threads, [&](std::size_t k) {
        const std::size_t g = k / spec.replications;
        const std::size_t r = k % spec.replications;
        const ParamSet& truth = spec.grid[g];
        const auto labeled = sample_iid(truth.theta, truth.gamma, truth.q, spec.sample_size,
                                        derive_seed(spec.seed, {g, r, 0}));
        const auto masked =
            mask(labeled, masking_rate(spec, truth.q), derive_seed(spec.seed, {g, r, 1}));
        Slot& slot = slots[k];
        slot.attempt(g, r, kEm, [&] {
            return from_restarts(
                em_fit_restarts(masked, spec.restarts, derive_seed(spec.seed, {g, r, 2})));
        });
        slot.attempt(g, r, kM1Service,
                     [&] { return plain(method1_fit(masked, M0Policy::AsService)); });
        slot.attempt(g, r, kM1Kab, [&] { return plain(method1_fit(masked, M0Policy::AsKab)); });
        slot.attempt(g, r, kM2Service,
                     [&] { return plain(method2_fit(masked, {M0Policy::AsService})); });
        slot.attempt(g, r, kM2Sab, [&] { return plain(method2_fit(masked, {M0Policy::AsSab})); });
        slot.attempt(g, r, kM2Classifier, [&] {
            const auto scored = attach_classifier_scores(
                labeled, masked, spec.classifier_sensitivity, spec.classifier_specificity,
                derive_seed(spec.seed, {g, r, 3}));
            return plain(method2_fit(scored, {M0Policy::PiThreshold, 0.5}));
        });
    });

    AccuracyResult result;
    merge(slots, result.estimates, result.failures);
    static constexpr std::string_view order[] = {kEm,        kM1Service, kM1Kab,
                                                 kM2Service, kM2Sab,     kM2Classifier};
    for (std::size_t g = 0; g < cells; ++g) {
        const ParamSet& truth = spec.grid[g];
        std::vector<Estimate> mine;
        for (const auto& e : result.estimates)
            if (e.grid == g) mine.push_back(e);
        AccuracyCell cell;
        cell.truth = truth;
        cell.sab_fraction = (1.0 - truth.q) * truth.theta / (truth.theta + truth.gamma);
        cell.methods = summarize(mine, order, truth, true);
        result.cells.push_back(std::move(cell));
    }

    if (writes(spec)) {
        write_estimates(spec.output_dir / "accuracy_estimates.csv", result.estimates, spec.grid);
        auto out = open_output(spec.output_dir / "accuracy_mse.csv");
        out << "grid,theta_true,q_true,gamma_true,sab_fraction," << kSummaryColumns << '\n';
        for (std::size_t g = 0; g < cells; ++g) {
            const auto& c = result.cells[g];
            for (const auto& m : c.methods) {
                out << g << ',' << format_number(c.truth.theta) << ','
                    << format_number(c.truth.q) << ',' << format_number(c.truth.gamma) << ','
                    << format_number(c.sab_fraction) << ',';
                write_summary_row(out, m);
            }
        }
        write_failures(spec, result.failures);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Sensitivity to the EM starting point
// ---------------------------------------------------------------------------

SensitivityResult run_sensitivity(const ExperimentSpec& spec) {
    spec.check();
    static constexpr InitKind variants[] = {InitKind::AllSab, InitKind::AllSr,
                                            InitKind::FiftyFifty, InitKind::FromPi};
    static constexpr std::string_view names[] = {"all-sab", "all-sr", "fifty-fifty", "from-pi"};

    const bool ingested = !spec.input_path.empty();
    std::vector<Observation> corpus;
    if (ingested) {
        corpus = read_observations(spec.input_path, spec.hours_per_unit);
        for (const auto& o : corpus)
            if (o.is_uncertain() && !o.pi())
                throw InvalidArgument(
                    "from-pi initialization needs a pi value on every uncertain record");
    }
    const std::size_t reps = ingested ? 1 : spec.replications;
    const ParamSet truth = ingested ? ParamSet{kNaN, kNaN, kNaN} : spec.grid.front();

    std::vector<Slot> slots(reps);
    parallel_for(reps, spec.threads, [&](std::size_t r) {
        std::vector<Observation> data;
        if (ingested) {
            data = corpus;
        } else {
            const auto labeled = sample_iid(truth.theta, truth.gamma, truth.q, spec.sample_size,
                                            derive_seed(spec.seed, {0, r, 0}));
            const auto masked =
                mask(labeled, masking_rate(spec, truth.q), derive_seed(spec.seed, {0, r, 1}));
            data = attach_classifier_scores(labeled, masked, spec.classifier_sensitivity,
                                            spec.classifier_specificity,
                                            derive_seed(spec.seed, {0, r, 3}));
        }
        for (std::size_t v = 0; v < std::size(variants); ++v) {
            slots[r].attempt(0, r, names[v], [&] {
                EmConfig cfg;
                cfg.init = {variants[v], 0};
                const EmTrace trace = em_fit(data, cfg);
                return Estimate{0, 0, {}, trace.final, trace.passes(), trace.converged};
            });
        }
    });

    SensitivityResult result;
    result.truth = truth;
    merge(slots, result.estimates, result.failures);
    result.variants = summarize(result.estimates, names,
                                ingested ? std::nullopt : std::optional<ParamSet>(truth), true);
    for (std::size_t r = 0; r < reps; ++r) {
        double lo[3] = {INFINITY, INFINITY, INFINITY}, hi[3] = {-INFINITY, -INFINITY, -INFINITY};
        std::size_t seen = 0;
        for (const auto& e : result.estimates) {
            if (e.replication != r) continue;
            ++seen;
            const double v[3] = {e.params.theta, e.params.q, e.params.gamma};
            for (int i = 0; i < 3; ++i) {
                lo[i] = std::min(lo[i], v[i]);
                hi[i] = std::max(hi[i], v[i]);
            }
        }
        if (seen < 2) continue;
        result.max_spread_theta = std::max(result.max_spread_theta, hi[0] - lo[0]);
        result.max_spread_q = std::max(result.max_spread_q, hi[1] - lo[1]);
        result.max_spread_gamma = std::max(result.max_spread_gamma, hi[2] - lo[2]);
    }

    if (writes(spec)) {
        const std::vector<ParamSet> truths = {truth};
        write_estimates(spec.output_dir / "sensitivity_estimates.csv", result.estimates, truths);
        auto out = open_output(spec.output_dir / "sensitivity_summary.csv");
        out << kSummaryColumns << '\n';
        for (const auto& v : result.variants) write_summary_row(out, v);
        write_failures(spec, result.failures);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Robustness across disjoint subsamples
// ---------------------------------------------------------------------------

RobustnessResult run_robustness(const ExperimentSpec& spec) {
    spec.check();
    const auto corpus = read_observations(spec.input_path, spec.hours_per_unit);
    const std::size_t k = spec.partitions;
    if (corpus.size() < k) throw InvalidArgument("fewer records than subsamples");

    const auto order = permutation(corpus.size(), derive_seed(spec.seed, {0}));
    RobustnessResult result;
    result.reference =
        em_fit_restarts(corpus, spec.restarts, derive_seed(spec.seed, {2})).mean;

    std::vector<std::optional<SubsampleFit>> fits(k);
    std::vector<Slot> slots(k);
    parallel_for(k, spec.threads, [&](std::size_t i) {
        const std::size_t begin = i * corpus.size() / k;
        const std::size_t end = (i + 1) * corpus.size() / k;
        std::vector<Observation> part;
        part.reserve(end - begin);
        for (std::size_t j = begin; j < end; ++j) part.push_back(corpus[order[j]]);
        slots[i].attempt(i, 0, kEm, [&] {
            return from_restarts(
                em_fit_restarts(part, spec.restarts, derive_seed(spec.seed, {1, i})));
        });
        if (!slots[i].estimates.empty())
            fits[i] = SubsampleFit{part.size(), slots[i].estimates.front().params};
    });
    for (auto& s : slots)
        std::move(s.failures.begin(), s.failures.end(), std::back_inserter(result.failures));
    for (auto& f : fits)
        if (f) result.subsamples.push_back(*f);

    if (writes(spec)) {
        auto out = open_output(spec.output_dir / "robustness_subsamples.csv");
        out << "partition,size,theta,q,gamma,mean_patience_min\n";
        for (std::size_t i = 0; i < k; ++i) {
            if (!fits[i]) continue;
            const auto& p = fits[i]->params;
            out << i << ',' << fits[i]->size << ',' << format_number(p.theta) << ','
                << format_number(p.q) << ',' << format_number(p.gamma) << ','
                << format_number(mean_patience_minutes(p.theta)) << '\n';
        }
        auto ref = open_output(spec.output_dir / "robustness_reference.csv");
        ref << "size,theta,q,gamma,mean_patience_min\n";
        ref << corpus.size() << ',' << format_number(result.reference.theta) << ','
            << format_number(result.reference.q) << ',' << format_number(result.reference.gamma)
            << ',' << format_number(mean_patience_minutes(result.reference.theta)) << '\n';
        write_failures(spec, result.failures);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Queue-model fit against a reference system with silent abandonment
// ---------------------------------------------------------------------------

namespace {

// Estimation inputs pooled over every reference segment.
struct Pooled {
    std::vector<LabeledObservation> labeled;
    double served_time = 0.0, sab_time = 0.0;
    std::size_t served = 0, sab = 0;
};

std::vector<QueueModel> fit_queue_models(const Pooled& pool) {
    if (pool.served == 0) throw NonIdentifiable("reference run has no served customers");
    const double mu_sr = static_cast<double>(pool.served) / pool.served_time;

    // Model 1 never sees silent abandonment: those records look served.
    std::vector<Observation> ignoring, as_kab;
    for (const auto& l : pool.labeled) {
        if (l.cls == CompleteClass::SilentAbandonment) {
            ignoring.push_back(Observation::make(l.obs.u(), false, Delta::Zero));
            as_kab.push_back(Observation::make(l.obs.u(), true, Delta::One));
        } else {
            ignoring.push_back(l.obs);
            as_kab.push_back(l.obs);
        }
    }
    const double mu_pooled =
        static_cast<double>(pool.served + pool.sab) / (pool.served_time + pool.sab_time);
    const ParamSet m1 = method1_fit(ignoring, M0Policy::AsService);
    const ParamSet m2 = method1_fit(as_kab, M0Policy::AsService);
    const ParamSet m45 = method2_fit(pool.labeled);
    const double mu_sab = pool.sab > 0 && pool.sab_time > 0.0
                              ? static_cast<double>(pool.sab) / pool.sab_time
                              : SimConfig::kInstantaneous;
    return {
        {"model1", m1.theta, 1.0, mu_pooled, SimConfig::kInstantaneous},
        {"model2", m2.theta, 1.0, mu_sr, SimConfig::kInstantaneous},
        {"model4", m45.theta, m45.q, mu_sr, SimConfig::kInstantaneous},
        {"model5", m45.theta, m45.q, mu_sr, mu_sab},
    };
}

void write_perf_columns(std::ostream& out, const PerfMeasures& m) {
    out << format_number(m.p_wait) << ',' << format_number(m.p_ab) << ','
        << format_number(m.e_queue) << ',' << format_number(m.e_wait) << ','
        << format_number(m.e_wait_served);
}

}  // namespace

QueueFitResult run_queuefit(const ExperimentSpec& spec) {
    spec.check();
    const QueueFitSetup& s = spec.queuefit;
    const std::size_t segments = s.lambdas.size();
    const std::size_t reps = spec.replications;

    auto base = [&](double lambda) {
        SimConfig c;
        c.lambda = lambda;
        c.n_slots = s.n_slots;
        c.horizon = s.warmup + s.segment_hours;
        c.warmup = s.warmup;
        return c;
    };

    // Reference system.
    std::vector<SimResult> runs(segments * reps);
    parallel_for(runs.size(), spec.threads, [&](std::size_t k) {
        SimConfig c = base(s.lambdas[k / reps]);
        c.theta = s.theta;
        c.q = s.q;
        c.mu_sr = s.mu_sr;
        c.mu_sab = s.mu_sab;
        c.seed = derive_seed(spec.seed, {0, k / reps, k % reps});
        runs[k] = simulate(c);
    });

    QueueFitResult result;
    Pooled pool;
    for (std::size_t h = 0; h < segments; ++h) {
        std::vector<PerfMeasures> per_rep;
        for (std::size_t r = 0; r < reps; ++r) {
            SimResult& run = runs[h * reps + r];
            per_rep.push_back(run.measures);
            for (const auto& rec : run.records) {
                if (rec.outcome == Outcome::Served) {
                    ++pool.served;
                    pool.served_time += *rec.service_duration;
                } else if (rec.outcome == Outcome::Sab && rec.service_duration) {
                    ++pool.sab;
                    pool.sab_time += *rec.service_duration;
                }
            }
            auto labeled = extract_labeled(run.records);
            pool.labeled.insert(pool.labeled.end(), labeled.begin(), labeled.end());
            run.records.clear();
            run.records.shrink_to_fit();
        }
        result.reference.push_back(average(per_rep));
    }
    result.models = fit_queue_models(pool);
    pool.labeled.clear();
    pool.labeled.shrink_to_fit();

    // Candidates share random numbers with each other, not with the reference.
    const std::size_t models = result.models.size();
    std::vector<PerfMeasures> cand(models * segments * reps);
    parallel_for(cand.size(), spec.threads, [&](std::size_t k) {
        const std::size_t m = k / (segments * reps);
        const std::size_t h = (k / reps) % segments;
        const std::size_t r = k % reps;
        const QueueModel& model = result.models[m];
        SimConfig c = base(s.lambdas[h]);
        c.theta = model.theta;
        c.q = model.q;
        c.mu_sr = model.mu_sr;
        c.mu_sab = model.mu_sab;
        c.seed = derive_seed(spec.seed, {1, h, r});
        cand[k] = simulate(c).measures;
    });
    for (std::size_t m = 0; m < models; ++m) {
        std::vector<PerfMeasures> series;
        for (std::size_t h = 0; h < segments; ++h)
            series.push_back(average(std::span(cand).subspan((m * segments + h) * reps, reps)));
        result.candidates[result.models[m].id] = std::move(series);
    }
    result.rmse = rmse_compare(result.reference, result.candidates);

    // Waiting time as the phantom service time grows (true parameters).
    result.sweep.resize(s.sweep_sab_los_min.size());
    parallel_for(result.sweep.size(), spec.threads, [&](std::size_t i) {
        const double los = s.sweep_sab_los_min[i];
        SimConfig c = base(s.sweep_lambda);
        c.theta = s.theta;
        c.q = s.q;
        c.mu_sr = s.mu_sr;
        c.mu_sab = los > 0.0 ? 60.0 / los : SimConfig::kInstantaneous;
        c.seed = derive_seed(spec.seed, {2});
        result.sweep[i] = {los, simulate(c).measures};
    });

    if (writes(spec)) {
        auto models_out = open_output(spec.output_dir / "queuefit_models.csv");
        models_out << "model,theta,q,mu_sr,mu_sab\n";
        for (const auto& m : result.models)
            models_out << m.id << ',' << format_number(m.theta) << ',' << format_number(m.q)
                       << ',' << format_number(m.mu_sr) << ',' << fmt_mu(m.mu_sab) << '\n';

        auto hourly = open_output(spec.output_dir / "queuefit_hourly.csv");
        hourly << "model,segment,lambda,p_wait,p_ab,e_queue,e_wait,e_wait_served\n";
        auto row = [&](std::string_view id, std::size_t h, const PerfMeasures& m) {
            hourly << id << ',' << h << ',' << format_number(s.lambdas[h]) << ',';
            write_perf_columns(hourly, m);
            hourly << '\n';
        };
        for (std::size_t h = 0; h < segments; ++h) row("reference", h, result.reference[h]);
        for (const auto& [id, series] : result.candidates)
            for (std::size_t h = 0; h < segments; ++h) row(id, h, series[h]);

        auto rmse = open_output(spec.output_dir / "queuefit_rmse.csv");
        write_rmse(rmse, result.rmse);

        auto sweep = open_output(spec.output_dir / "queuefit_sweep.csv");
        sweep << "sab_los_min,p_wait,p_ab,e_queue,e_wait,e_wait_served\n";
        for (const auto& p : result.sweep) {
            sweep << format_number(p.sab_los_min) << ',';
            write_perf_columns(sweep, p.measures);
            sweep << '\n';
        }
        write_failures(spec, {});
    }
    return result;
}

// ---------------------------------------------------------------------------
// Estimation on queue-simulated data from a scenario file
// ---------------------------------------------------------------------------

ScenarioResult run_scenario(const ExperimentSpec& spec) {
    spec.check();
    ScenarioResult result;
    result.config = read_scenario_config(spec.config_path);
    const SimConfig& sim = result.config.sim;
    const std::size_t reps = spec.replications > 0 ? spec.replications : result.config.replications;

    std::vector<Slot> slots(reps);
    result.measures.resize(reps);
    parallel_for(reps, spec.threads, [&](std::size_t r) {
        SimConfig c = sim;
        c.seed = derive_seed(spec.seed, {r, 0});
        SimResult run = simulate(c);
        result.measures[r] = run.measures;
        const double p_ss =
            spec.p_ss ? *spec.p_ss : (result.config.p_ss ? *result.config.p_ss : -1.0);
        const auto data = extract_observations(
            run.records, p_ss >= 0.0 ? ExtractMode::masked(p_ss, derive_seed(spec.seed, {r, 1}))
                                     : ExtractMode::by_indication());
        run.records.clear();
        run.records.shrink_to_fit();
        Slot& slot = slots[r];
        slot.attempt(0, r, kEm, [&] {
            return from_restarts(
                em_fit_restarts(data, spec.restarts, derive_seed(spec.seed, {r, 2})));
        });
        slot.attempt(0, r, kM1Service,
                     [&] { return plain(method1_fit(data, M0Policy::AsService)); });
        slot.attempt(0, r, kM1Kab, [&] { return plain(method1_fit(data, M0Policy::AsKab)); });
        slot.attempt(0, r, kM2Service,
                     [&] { return plain(method2_fit(data, {M0Policy::AsService})); });
        slot.attempt(0, r, kM2Sab, [&] { return plain(method2_fit(data, {M0Policy::AsSab})); });
    });

    merge(slots, result.estimates, result.failures);
    static constexpr std::string_view order[] = {kEm, kM1Service, kM1Kab, kM2Service, kM2Sab};
    const ParamSet truth{sim.theta, sim.q, kNaN};
    result.methods = summarize(result.estimates, order, truth, false);

    if (writes(spec)) {
        const std::vector<ParamSet> truths = {truth};
        write_estimates(spec.output_dir / "scenario_estimates.csv", result.estimates, truths);
        auto out = open_output(spec.output_dir / "scenario_summary.csv");
        out << kSummaryColumns << '\n';
        for (const auto& m : result.methods) write_summary_row(out, m);
        auto t = open_output(spec.output_dir / "scenario_truth.csv");
        t << "theta,q,mean_patience_min\n"
          << format_number(sim.theta) << ',' << format_number(sim.q) << ','
          << format_number(mean_patience_minutes(sim.theta)) << '\n';
        auto perf = open_output(spec.output_dir / "scenario_perf.csv");
        perf << kPerfHeader << '\n';
        for (std::size_t r = 0; r < reps; ++r) write_perf_row(perf, r, result.measures[r]);
        write_failures(spec, result.failures);
    }
    return result;
}

}  // namespace sabkit
