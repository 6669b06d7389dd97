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

#include "sabkit/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <queue>

#include "numeric.hpp"
#include "sabkit/error.hpp"
#include "sabkit/random.hpp"

namespace sabkit {

std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::Served: return "served";
        case Outcome::Kab: return "kab";
        case Outcome::Sab: return "sab";
        case Outcome::CensoredAtEnd: return "censored";
    }
    return "?";
}

void SimConfig::check() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(lambda) || !positive(theta) || !positive(mu_sr))
        throw InvalidArgument("lambda, theta and mu_sr must be positive and finite");
    if (!(mu_sab > 0.0)) throw InvalidArgument("mu_sab must be positive (or instantaneous)");
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("q must lie in [0, 1]");
    if (n_slots < 1) throw InvalidArgument("n_slots must be at least 1");
    if (!positive(horizon)) throw InvalidArgument("horizon must be positive");
    if (!(warmup >= 0.0) || !(warmup < horizon))
        throw InvalidArgument("warmup must be nonnegative and shorter than the horizon");
}

namespace {

struct Customer {
    double arrival;
    double patience;
    double work;  // unit exponential
    bool indication;
    Outcome outcome = Outcome::CensoredAtEnd;
    double queue_exit = 0.0;  // assignment or Kab departure
    double service_duration = 0.0;
    bool assigned = false;
};

double overlap(double a, double b, double lo, double hi) {
    return std::max(0.0, std::min(b, hi) - std::max(a, lo));
}

}  // namespace

SimResult simulate(const SimConfig& cfg) {
    cfg.check();
    Rng rng(cfg.seed);
    std::vector<Customer> customers;
    customers.reserve(static_cast<std::size_t>(cfg.lambda * cfg.horizon * 1.1) + 16);

    std::priority_queue<double, std::vector<double>, std::greater<>> completions;
    std::deque<std::size_t> queue;
    std::size_t busy = 0;

    auto start_service = [&](std::size_t id, double now) -> bool {
        Customer& c = customers[id];
        c.assigned = true;
        c.queue_exit = now;
        const bool silent = c.arrival + c.patience <= now;  // only reachable with y = 0
        c.outcome = silent ? Outcome::Sab : Outcome::Served;
        if (silent && cfg.sab_instantaneous()) {
            c.service_duration = 0.0;
            return false;
        }
        c.service_duration = c.work / (silent ? cfg.mu_sab : cfg.mu_sr);
        completions.push(now + c.service_duration);
        ++busy;
        return true;
    };

    // Fill one free slot from the head of the queue, dropping customers who
    // abandoned with an indication in the meantime.
    auto fill_slot = [&](double now) {
        while (!queue.empty()) {
            const std::size_t id = queue.front();
            queue.pop_front();
            Customer& c = customers[id];
            if (c.indication && c.arrival + c.patience <= now) {
                c.outcome = Outcome::Kab;
                c.queue_exit = c.arrival + c.patience;
                continue;
            }
            if (start_service(id, now)) return;
        }
    };

    double next_arrival = rng.exponential(cfg.lambda);
    for (;;) {
        const double next_completion =
            completions.empty() ? std::numeric_limits<double>::infinity() : completions.top();
        if (next_arrival <= next_completion && next_arrival < cfg.horizon) {
            const double now = next_arrival;
            Customer c{now, 0.0, 0.0, false};
            c.patience = rng.exponential(cfg.theta);
            c.indication = rng.bernoulli(cfg.q);
            c.work = rng.exponential(1.0);
            customers.push_back(c);
            const std::size_t id = customers.size() - 1;
            if (busy < cfg.n_slots) {
                // A free slot implies an empty queue.
                start_service(id, now);
            } else {
                queue.push_back(id);
            }
            next_arrival = now + rng.exponential(cfg.lambda);
        } else if (next_completion < cfg.horizon) {
            completions.pop();
            --busy;
            fill_slot(next_completion);
        } else {
            break;
        }
    }

    // Customers still queued at the horizon.
    for (std::size_t id : queue) {
        Customer& c = customers[id];
        if (c.indication && c.arrival + c.patience <= cfg.horizon) {
            c.outcome = Outcome::Kab;
            c.queue_exit = c.arrival + c.patience;
        } else {
            c.outcome = Outcome::CensoredAtEnd;
            c.queue_exit = cfg.horizon;
        }
    }

    SimResult result;
    detail::Sum queue_area, true_queue_area, wait_sum, served_wait_sum;
    std::size_t resolved = 0, waited = 0, abandoned = 0, served_in_window = 0;
    const double window = cfg.horizon - cfg.warmup;

    for (const Customer& c : customers) {
        ++result.counts.arrivals;
        switch (c.outcome) {
            case Outcome::Served: ++result.counts.served; break;
            case Outcome::Kab: ++result.counts.kab; break;
            case Outcome::Sab: ++result.counts.sab; break;
            case Outcome::CensoredAtEnd: ++result.counts.censored; break;
        }
        queue_area.add(overlap(c.arrival, c.queue_exit, cfg.warmup, cfg.horizon));
        true_queue_area.add(overlap(c.arrival, std::min(c.queue_exit, c.arrival + c.patience),
                                    cfg.warmup, cfg.horizon));
        if (c.arrival < cfg.warmup) continue;

        CustomerRecord r;
        r.arrival = c.arrival;
        r.patience = c.patience;
        r.indication = c.indication;
        r.outcome = c.outcome;
        r.wait = c.outcome == Outcome::Kab ? c.patience : c.queue_exit - c.arrival;
        if (c.assigned) {
            r.service_start = c.queue_exit;
            r.service_duration = c.service_duration;
        }
        result.records.push_back(r);

        if (c.outcome == Outcome::CensoredAtEnd) continue;
        ++resolved;
        if (r.wait > 0.0) ++waited;
        wait_sum.add(r.wait);
        if (c.outcome == Outcome::Served) {
            ++served_in_window;
            served_wait_sum.add(r.wait);
        } else {
            ++abandoned;
        }
    }

    PerfMeasures& m = result.measures;
    if (resolved > 0) {
        const double n = static_cast<double>(resolved);
        m.p_wait = static_cast<double>(waited) / n;
        m.p_ab = static_cast<double>(abandoned) / n;
        m.e_wait = wait_sum.value() / n;
    }
    if (served_in_window > 0)
        m.e_wait_served = served_wait_sum.value() / static_cast<double>(served_in_window);
    m.e_queue = queue_area.value() / window;
    m.e_queue_true = true_queue_area.value() / window;
    return result;
}

namespace {

std::optional<LabeledObservation> complete_view(const CustomerRecord& r) {
    switch (r.outcome) {
        case Outcome::CensoredAtEnd: return std::nullopt;
        case Outcome::Kab:
            return LabeledObservation{Observation::make(r.patience, true, Delta::One),
                                      CompleteClass::KnownAbandonment};
        case Outcome::Served:
            if (!(r.wait > 0.0)) return std::nullopt;
            return LabeledObservation{Observation::make(r.wait, false, Delta::Zero),
                                      CompleteClass::Service};
        case Outcome::Sab:
            if (!(r.wait > 0.0)) return std::nullopt;
            return LabeledObservation{Observation::make(r.wait, false, Delta::One),
                                      CompleteClass::SilentAbandonment};
    }
    return std::nullopt;
}

}  // namespace

std::vector<LabeledObservation> extract_labeled(std::span<const CustomerRecord> records) {
    std::vector<LabeledObservation> out;
    out.reserve(records.size());
    for (const auto& r : records)
        if (auto v = complete_view(r)) out.push_back(*v);
    return out;
}

std::vector<Observation> extract_observations(std::span<const CustomerRecord> records,
                                              const ExtractMode& mode) {
    using Kind = ExtractMode::Kind;
    if (mode.kind == Kind::Masked) {
        const auto labeled = extract_labeled(records);
        return mask(labeled, mode.p_ss, mode.seed);
    }
    std::vector<Observation> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        auto v = complete_view(r);
        if (!v) continue;
        const bool hide = mode.kind == Kind::ByIndication &&
                          (v->cls == CompleteClass::SilentAbandonment ||
                           (v->cls == CompleteClass::Service && !r.indication));
        out.push_back(hide ? Observation::make(v->obs.u(), false, Delta::Missing) : v->obs);
    }
    return out;
}

std::vector<LabeledObservation> sample_iid(double theta, double gamma, double q,
                                           std::size_t n_records, std::uint64_t seed) {
    if (!(theta > 0.0) || !(gamma > 0.0) || !std::isfinite(theta) || !std::isfinite(gamma))
        throw InvalidArgument("theta and gamma must be positive");
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("q must lie in [0, 1]");
    if (n_records < 1) throw InvalidArgument("n_records must be at least 1");

    Rng rng(seed);
    std::vector<LabeledObservation> out;
    out.reserve(n_records);
    for (std::size_t i = 0; i < n_records; ++i) {
        const double t = rng.exponential(theta);
        const double w = rng.exponential(gamma);
        const bool y = rng.bernoulli(q);
        if (t > w)
            out.push_back({Observation::make(w, false, Delta::Zero), CompleteClass::Service});
        else if (y)
            out.push_back(
                {Observation::make(t, true, Delta::One), CompleteClass::KnownAbandonment});
        else
            out.push_back(
                {Observation::make(w, false, Delta::One), CompleteClass::SilentAbandonment});
    }
    return out;
}

PerfMeasures erlang_a_oracle(double lambda, double mu, double theta, std::size_t n_slots) {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(lambda) || !positive(mu) || !positive(theta) || n_slots < 1)
        throw InvalidArgument("Erlang-A needs positive lambda, mu, theta and n_slots");

    const double n = static_cast<double>(n_slots);
    const double log_lambda = std::log(lambda);
    std::vector<double> log_p{0.0};
    double peak = 0.0;
    constexpr std::size_t kMaxStates = 50'000'000;
    for (std::size_t k = 1;; ++k) {
        const double kk = static_cast<double>(k);
        const double death = std::min(kk, n) * mu + std::max(kk - n, 0.0) * theta;
        const double next = log_p.back() + log_lambda - std::log(death);
        if (!std::isfinite(next)) throw NumericError("non-finite term in Erlang-A recursion");
        log_p.push_back(next);
        peak = std::max(peak, next);
        const bool decaying = k > n_slots && lambda < death;
        if (decaying && next < peak - 60.0) break;
        if (k > kMaxStates) throw NumericError("Erlang-A state space did not truncate");
    }

    detail::Sum z;
    for (double lp : log_p) z.add(std::exp(lp - peak));
    const double log_z = peak + std::log(z.value());

    detail::Sum p_wait, e_queue, p_served, served_wait;
    double p_survive = 1.0;   // P(reach service | j ahead), built up over j
    double wait_given = 0.0;  // E[wait | served, j ahead]
    for (std::size_t k = 0; k < log_p.size(); ++k) {
        const double p = std::exp(log_p[k] - log_z);
        if (k < n_slots) {
            p_served.add(p);
            continue;
        }
        const double j = static_cast<double>(k - n_slots);
        p_wait.add(p);
        e_queue.add(j * p);
        const double out_rate = n * mu + (j + 1.0) * theta;
        p_survive *= (n * mu + j * theta) / out_rate;
        wait_given += 1.0 / out_rate;
        p_served.add(p * p_survive);
        served_wait.add(p * p_survive * wait_given);
    }

    PerfMeasures m;
    m.p_wait = p_wait.value();
    m.e_queue = e_queue.value();
    m.e_queue_true = m.e_queue;
    m.p_ab = theta * m.e_queue / lambda;
    m.e_wait = m.e_queue / lambda;
    m.e_wait_served = p_served.value() > 0.0 ? served_wait.value() / p_served.value() : 0.0;
    for (double v : {m.p_wait, m.e_queue, m.p_ab, m.e_wait, m.e_wait_served})
        if (!std::isfinite(v)) throw NumericError("non-finite Erlang-A measure");
    return m;
}

}  // namespace sabkit
