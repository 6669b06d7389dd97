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

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sabkit/domain.hpp"

namespace sabkit {

/// Parameters of the FCFS multi-slot queue with known and silent
/// abandonment. Times in hours, rates per hour.
struct SimConfig {
    static constexpr double kInstantaneous = std::numeric_limits<double>::infinity();

    double lambda = 1.0;
    double theta = 1.0;
    double q = 1.0;
    std::size_t n_slots = 1;
    double mu_sr = 1.0;
    double mu_sab = kInstantaneous;  // service rate of phantom customers
    double horizon = 720.0;
    double warmup = 2.0;
    std::uint64_t seed = 1;

    bool sab_instantaneous() const noexcept { return mu_sab == kInstantaneous; }
    void check() const;
};

enum class Outcome : std::uint8_t { Served, Kab, Sab, CensoredAtEnd };

std::string_view to_string(Outcome o);

struct CustomerRecord {
    double arrival = 0.0;
    double patience = 0.0;    // T
    bool indication = false;  // Y
    // Time in queue: until assignment (Served, Sab), until departure (Kab),
    // until the horizon (CensoredAtEnd).
    double wait = 0.0;
    Outcome outcome = Outcome::CensoredAtEnd;
    std::optional<double> service_start;
    std::optional<double> service_duration;
};

/// P{Wait>0}, P{Ab} (known plus silent), time-average queue length, mean wait
/// and mean wait of served customers. e_queue counts phantoms while they sit
/// in the queue; e_queue_true drops each customer once its patience expires.
struct PerfMeasures {
    double p_wait = 0.0;
    double p_ab = 0.0;
    double e_queue = 0.0;
    double e_wait = 0.0;
    double e_wait_served = 0.0;
    double e_queue_true = 0.0;
};

struct SimCounts {
    std::size_t arrivals = 0;
    std::size_t served = 0;
    std::size_t kab = 0;
    std::size_t sab = 0;
    std::size_t censored = 0;
};

struct SimResult {
    // Customers arriving in [warmup, horizon), in arrival order.
    std::vector<CustomerRecord> records;
    PerfMeasures measures;
    // Over every arrival in [0, horizon), warmup included.
    SimCounts counts;
};

/// One replication of the queue. Deterministic for a given config (seed
/// included). Each arrival draws its patience, indication and a unit
/// exponential work requirement up front; the work is divided by mu_sr or
/// mu_sab once the outcome is known, so runs that differ only in service
/// rates share their random numbers.
SimResult simulate(const SimConfig& config);

struct ExtractMode {
    enum class Kind { Complete, Masked, ByIndication };
    Kind kind = Kind::Complete;
    double p_ss = 0.0;       // Masked
    std::uint64_t seed = 0;  // Masked

    static ExtractMode complete() { return {}; }
    static ExtractMode masked(double p_ss, std::uint64_t seed) {
        return {Kind::Masked, p_ss, seed};
    }
    // Served customers whose own indication draw is 0 lose their delta, as do
    // all silent abandonments.
    static ExtractMode by_indication() { return {Kind::ByIndication, 0.0, 0}; }
};

/// Observations from simulated customers: Served -> (wait, 0, 0),
/// Kab -> (patience, 1, 1), Sab -> (wait, 0, 1), then masking per mode.
/// Censored customers are skipped, as are zero-wait customers (u must be
/// positive; a zero wait adds nothing to the theta or q equations).
std::vector<Observation> extract_observations(std::span<const CustomerRecord> records,
                                              const ExtractMode& mode);

/// Complete-class view of the same customers (same filtering).
std::vector<LabeledObservation> extract_labeled(std::span<const CustomerRecord> records);

/// i.i.d. draws T ~ exp(theta), W ~ exp(gamma), Y ~ Bernoulli(q) with
/// delta = 1{T <= W}; u = T for known abandonments and W otherwise.
std::vector<LabeledObservation> sample_iid(double theta, double gamma, double q,
                                           std::size_t n_records, std::uint64_t seed);

/// Steady state of M/M/n+M from the birth-death chain, in log space.
/// e_wait_served comes from the phase structure of a tagged customer's wait.
PerfMeasures erlang_a_oracle(double lambda, double mu, double theta, std::size_t n_slots);

}  // namespace sabkit
