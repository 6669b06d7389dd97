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
#include <span>
#include <string_view>
#include <vector>

#include "sabkit/domain.hpp"

namespace sabkit {

// ---------------------------------------------------------------------------
// Likelihoods
// ---------------------------------------------------------------------------

/// Weighted complete-data log-likelihood
///
///   sum c1 (log g - g u - t u)
/// + sum c2 (log t - t u - g u + log q)
/// + sum c3 (log(1-q) + log(1 - exp(-t u)) + log g - g u)
///
/// A term with zero weight contributes nothing, so q in {0, 1} is fine as
/// long as the conflicting class carries no mass. When it does, the result is
/// -infinity (never NaN).
double loglik_complete(std::span<const Observation> data, std::span<const ClassWeights> weights,
                       const ParamSet& params);

/// Observed-data log-likelihood in (theta, gamma) with missing delta summed
/// out under the E-step posterior. This is the objective the EM iteration
/// ascends and the quantity recorded in EmTrace. Indication terms are left
/// out: the posterior of an uncertain record does not involve q.
double observed_loglik(std::span<const Observation> data, const ParamSet& params);

// ---------------------------------------------------------------------------
// EM building blocks
// ---------------------------------------------------------------------------

/// Posterior class weights given the current parameters. Records with known
/// delta get hard indicators; an uncertain record gets
/// c3 = 1 - exp(-theta u), c1 = 1 - c3, c2 = 0.
std::vector<ClassWeights> e_step(std::span<const Observation> data, const ParamSet& params);

/// Maximizer of the weighted complete-data log-likelihood:
///   q     = sum c2 / sum (1 - c1)
///   gamma = sum (1 - c2) / sum u
///   theta = root of theta_score (see solve_theta).
/// gamma may come back as 0 when every record is a known abandonment; the
/// result then reports at_boundary().
/// Throws NonIdentifiable when there is no abandonment mass.
ParamSet m_step(std::span<const Observation> data, std::span<const ClassWeights> weights);

struct ThetaTerm {
    double u = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
};

/// Left-hand side of the theta first-order condition
///   theta * sum (c3 - 1) u + sum c2 + theta * sum c3 u e^{-theta u} / (1 - e^{-theta u}).
/// Strictly decreasing and convex in theta; positive as theta -> 0.
double theta_score(std::span<const ThetaTerm> terms, double theta);

inline constexpr double kThetaResidualTolerance = 1e-10;

/// Positive root of theta_score. The bracket starts at [1e-12, 1] and its
/// upper end doubles until the score changes sign (at most 200 times); the
/// root is then polished by Newton steps that fall back to bisection whenever
/// they leave the bracket.
/// Throws NonIdentifiable when no record carries abandonment weight or the
/// score never changes sign (e.g. pure left-censored data).
double solve_theta(std::span<const ThetaTerm> terms);

// ---------------------------------------------------------------------------
// EM driver
// ---------------------------------------------------------------------------

enum class InitKind { AllSab, AllSr, FiftyFifty, FromPi, RandomUniform };

std::string_view to_string(InitKind k);
InitKind parse_init_kind(std::string_view s);

struct EmInit {
    InitKind kind = InitKind::RandomUniform;
    std::uint64_t seed = 0;  // RandomUniform only
};

struct EmConfig {
    double epsilon = 1e-6;
    std::size_t max_iters = 10'000;
    EmInit init{};

    void check() const;
};

struct EmIteration {
    ParamSet params;
    double observed_loglik = 0.0;
};

struct EmTrace {
    // Entry 0 holds the starting parameters; entry t the result of the t-th
    // E/M pass.
    std::vector<EmIteration> iterations;
    bool converged = false;
    ParamSet final{};

    std::size_t passes() const noexcept {
        return iterations.empty() ? 0 : iterations.size() - 1;
    }
};

/// Starting weights for the uncertain records; other records get their hard
/// indicators.
///   AllSab: c3 = 1.  AllSr: c3 = 0.  FiftyFifty: alternating 1, 0, 1, ...
///   over uncertain records in input order.  FromPi: c3 = pi (pi required).
///   RandomUniform: c3 ~ U(0, 1).
std::vector<ClassWeights> initial_weights(std::span<const Observation> data, const EmInit& init);

/// EM for censored data with missing abandonment indicators. Iterates until
/// |dtheta| + |dq| + |dgamma| <= epsilon or max_iters passes; hitting the cap
/// leaves converged = false.
EmTrace em_fit(std::span<const Observation> data, const EmConfig& config);

struct RestartSummary {
    ParamSet mean{};
    std::size_t restarts = 0;
    std::size_t total_passes = 0;
    bool all_converged = true;
};

/// Runs em_fit from `restarts` independent uniform random initializations and
/// averages the final parameters.
RestartSummary em_fit_restarts(std::span<const Observation> data, std::size_t restarts,
                               std::uint64_t seed, double epsilon = 1e-6,
                               std::size_t max_iters = 10'000);

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

// How records with missing delta are resolved by estimators that cannot
// handle them.
enum class M0Policy { AsService, AsKab, AsSab, PiThreshold };

std::string_view to_string(M0Policy p);

struct M0Resolution {
    M0Policy policy = M0Policy::AsService;
    double threshold = 0.5;  // PiThreshold: pi >= threshold means silent abandonment
};

/// Right-censored exponential MLE. Uncertain records become service
/// (AsService) or known abandonments (AsKab); every delta = 1 record counts
/// as an exact abandonment time.
///   theta = #(delta = 1) / sum u,  gamma = #(delta = 0) / sum u,  q = 1.
ParamSet method1_fit(std::span<const Observation> data, M0Policy policy);

/// Left- and right-censored MLE on complete labels: m_step with hard weights.
ParamSet method2_fit(std::span<const LabeledObservation> data);

/// method2_fit after resolving each uncertain record by policy.
ParamSet method2_fit(std::span<const Observation> data, const M0Resolution& resolution);

/// Hard complete-class labels for a record set under a resolution policy
/// (AsService, AsSab or PiThreshold).
std::vector<LabeledObservation> resolve_labels(std::span<const Observation> data,
                                               const M0Resolution& resolution);

}  // namespace sabkit
