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

#include "sabkit/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "numeric.hpp"
#include "sabkit/error.hpp"
#include "sabkit/random.hpp"

namespace sabkit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// x / (e^x - 1), continuous at 0.
double h(double x) {
    if (x < 1e-8) return 1.0 - 0.5 * x;
    const double d = std::expm1(x);
    return std::isinf(d) ? 0.0 : x / d;
}

// d/dx [x / (e^x - 1)]
double h_prime(double x) {
    if (x < 1e-4) return -0.5 + x / 6.0 - x * x * x / 180.0;
    if (x > 700.0) return 0.0;
    const double d = std::expm1(x);
    return (d - x * (d + 1.0)) / (d * d);
}

double log1m_exp_neg(double x) {
    // log(1 - e^{-x}) for x > 0
    return x < 0.693 ? std::log(-std::expm1(-x)) : std::log1p(-std::exp(-x));
}

// Adds w * value, treating 0 * anything as 0 and propagating -inf.
struct WeightedLog {
    detail::Sum sum;
    bool neg_inf = false;

    void add(double w, double value) {
        if (w == 0.0) return;
        if (value == kNegInf || std::isnan(value)) {
            neg_inf = true;
            return;
        }
        sum.add(w * value);
    }
    double result() const { return neg_inf ? kNegInf : sum.value(); }
};

void check_aligned(std::span<const Observation> data, std::span<const ClassWeights> weights) {
    if (data.size() != weights.size())
        throw InvalidArgument("data and weights differ in length");
}

CompleteClass resolve_uncertain(const Observation& o, const M0Resolution& r) {
    switch (r.policy) {
        case M0Policy::AsService: return CompleteClass::Service;
        case M0Policy::AsKab:
            throw InvalidArgument("complete labels resolve uncertain records as service, sab or "
                                  "by pi threshold");
        case M0Policy::AsSab: return CompleteClass::SilentAbandonment;
        case M0Policy::PiThreshold:
            if (!o.pi())
                throw InvalidArgument("pi threshold policy needs pi on every uncertain record");
            return *o.pi() >= r.threshold ? CompleteClass::SilentAbandonment
                                          : CompleteClass::Service;
    }
    throw InvalidArgument("unknown policy");
}

}  // namespace

double loglik_complete(std::span<const Observation> data, std::span<const ClassWeights> weights,
                       const ParamSet& params) {
    check_aligned(data, weights);
    const double t = params.theta;
    const double g = params.gamma;
    const double log_g = g > 0.0 ? std::log(g) : kNegInf;
    const double log_t = t > 0.0 ? std::log(t) : kNegInf;
    const double log_q = params.q > 0.0 ? std::log(params.q) : kNegInf;
    const double log_1mq = params.q < 1.0 ? std::log1p(-params.q) : kNegInf;

    WeightedLog acc;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double u = data[i].u();
        const auto& w = weights[i];
        acc.add(w.c1, log_g - g * u - t * u);
        acc.add(w.c2, log_t == kNegInf || log_q == kNegInf ? kNegInf
                                                           : log_t - t * u - g * u + log_q);
        if (w.c3 != 0.0) {
            const double lc = t > 0.0 ? log1m_exp_neg(t * u) : kNegInf;
            const bool inf = log_1mq == kNegInf || lc == kNegInf || log_g == kNegInf;
            acc.add(w.c3, inf ? kNegInf : log_1mq + lc + log_g - g * u);
        }
    }
    return acc.result();
}

double observed_loglik(std::span<const Observation> data, const ParamSet& params) {
    const double t = params.theta;
    const double g = params.gamma;
    const double log_g = g > 0.0 ? std::log(g) : kNegInf;
    const double log_t = t > 0.0 ? std::log(t) : kNegInf;

    WeightedLog acc;
    for (const auto& o : data) {
        const double u = o.u();
        switch (o.delta()) {
            case Delta::Zero:
                acc.add(1.0, log_g - g * u - t * u);
                break;
            case Delta::One:
                if (o.y())
                    acc.add(1.0, log_t - t * u - g * u);
                else
                    acc.add(1.0, (t > 0.0 ? log1m_exp_neg(t * u) : kNegInf) + log_g - g * u);
                break;
            case Delta::Missing:
                // e^{-tu} + (1 - e^{-tu}) = 1: only the wait density remains.
                acc.add(1.0, log_g - g * u);
                break;
        }
    }
    return acc.result();
}

std::vector<ClassWeights> e_step(std::span<const Observation> data, const ParamSet& params) {
    std::vector<ClassWeights> out;
    out.reserve(data.size());
    for (const auto& o : data) {
        if (o.is_uncertain()) {
            const double c3 = -std::expm1(-params.theta * o.u());
            out.push_back({1.0 - c3, 0.0, c3});
        } else {
            out.push_back(ClassWeights::indicator(classify_complete(o)));
        }
    }
    return out;
}

double theta_score(std::span<const ThetaTerm> terms, double theta) {
    detail::Sum linear;  // sum (c3 - 1) u
    detail::Sum rest;    // sum c2 + sum c3 h(theta u)
    for (const auto& t : terms) {
        linear.add((t.c3 - 1.0) * t.u);
        rest.add(t.c2);
        if (t.c3 != 0.0) rest.add(t.c3 * h(theta * t.u));
    }
    return theta * linear.value() + rest.value();
}

namespace {

double theta_score_slope(std::span<const ThetaTerm> terms, double theta) {
    detail::Sum s;
    for (const auto& t : terms) {
        s.add((t.c3 - 1.0) * t.u);
        if (t.c3 != 0.0) s.add(t.c3 * t.u * h_prime(theta * t.u));
    }
    return s.value();
}

}  // namespace

double solve_theta(std::span<const ThetaTerm> terms) {
    bool any_mass = false;
    bool any_exposure = false;  // some record with c3 < 1 adds -theta (1 - c3) u
    for (const auto& t : terms) {
        if (!(t.u > 0.0) || t.c2 < 0.0 || t.c3 < 0.0)
            throw InvalidArgument("theta terms need u > 0 and nonnegative weights");
        any_mass = any_mass || t.c2 > 0.0 || t.c3 > 0.0;
        any_exposure = any_exposure || t.c3 < 1.0;
    }
    if (!any_mass)
        throw NonIdentifiable("theta is not identifiable: no abandonment weight in the data");
    if (!any_exposure)
        throw NonIdentifiable(
            "theta is not identifiable: score stays positive (no finite maximizer)");

    double lo = 1e-12;
    double hi = 1.0;
    double f_hi = theta_score(terms, hi);
    int doublings = 0;
    while (f_hi > 0.0) {
        if (++doublings > 200)
            throw NonIdentifiable(
                "theta is not identifiable: score stays positive (no finite maximizer)");
        lo = hi;
        hi *= 2.0;
        f_hi = theta_score(terms, hi);
    }
    if (!std::isfinite(f_hi)) throw NumericError("non-finite theta score");
    if (f_hi == 0.0) return hi;

    double x = lo;
    double fx = theta_score(terms, x);
    double best = x;
    double best_f = std::abs(fx);
    for (int iter = 0; iter < 200; ++iter) {
        const double slope = theta_score_slope(terms, x);
        double next = x - fx / slope;
        if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
        const double f_next = theta_score(terms, next);
        if (!std::isfinite(f_next)) throw NumericError("non-finite theta score");
        if (f_next > 0.0)
            lo = next;
        else
            hi = next;
        const double step = std::abs(next - x);
        x = next;
        fx = f_next;
        if (std::abs(fx) < best_f) {
            best = x;
            best_f = std::abs(fx);
        }
        if (fx == 0.0 || step <= 4.0 * std::numeric_limits<double>::epsilon() * x ||
            hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi)
            break;
    }
    return best;
}

ParamSet m_step(std::span<const Observation> data, std::span<const ClassWeights> weights) {
    check_aligned(data, weights);
    if (data.empty()) throw InvalidArgument("m_step needs at least one record");

    detail::Sum s_c2, s_not_c1, s_not_c2, s_u;
    std::vector<ThetaTerm> terms;
    terms.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& w = weights[i];
        const double u = data[i].u();
        s_c2.add(w.c2);
        s_not_c1.add(1.0 - w.c1);
        s_not_c2.add(1.0 - w.c2);
        s_u.add(u);
        terms.push_back({u, w.c2, w.c3});
    }
    const double ab_mass = s_not_c1.value();
    if (!(ab_mass > 0.0))
        throw NonIdentifiable("q is not identifiable: no abandonment mass in the weights");

    ParamSet p;
    p.q = std::clamp(s_c2.value() / ab_mass, 0.0, 1.0);
    p.gamma = std::max(0.0, s_not_c2.value()) / s_u.value();
    p.theta = solve_theta(terms);
    return p;
}

std::string_view to_string(InitKind k) {
    switch (k) {
        case InitKind::AllSab: return "all-sab";
        case InitKind::AllSr: return "all-sr";
        case InitKind::FiftyFifty: return "fifty-fifty";
        case InitKind::FromPi: return "from-pi";
        case InitKind::RandomUniform: return "random";
    }
    return "?";
}

InitKind parse_init_kind(std::string_view s) {
    for (auto k : {InitKind::AllSab, InitKind::AllSr, InitKind::FiftyFifty, InitKind::FromPi,
                   InitKind::RandomUniform})
        if (s == to_string(k)) return k;
    throw InvalidArgument("unknown init variant '" + std::string(s) + "'");
}

void EmConfig::check() const {
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
    if (max_iters < 1) throw InvalidArgument("max_iters must be at least 1");
}

std::vector<ClassWeights> initial_weights(std::span<const Observation> data, const EmInit& init) {
    Rng rng(init.seed);
    std::vector<ClassWeights> out;
    out.reserve(data.size());
    std::size_t uncertain_seen = 0;
    for (const auto& o : data) {
        if (!o.is_uncertain()) {
            out.push_back(ClassWeights::indicator(classify_complete(o)));
            continue;
        }
        double c3 = 0.0;
        switch (init.kind) {
            case InitKind::AllSab: c3 = 1.0; break;
            case InitKind::AllSr: c3 = 0.0; break;
            case InitKind::FiftyFifty: c3 = uncertain_seen % 2 == 0 ? 1.0 : 0.0; break;
            case InitKind::FromPi:
                if (!o.pi())
                    throw InvalidArgument(
                        "from-pi initialization needs pi on every uncertain record");
                c3 = *o.pi();
                break;
            case InitKind::RandomUniform: c3 = rng.uniform(); break;
        }
        ++uncertain_seen;
        out.push_back({1.0 - c3, 0.0, c3});
    }
    return out;
}

EmTrace em_fit(std::span<const Observation> data, const EmConfig& config) {
    config.check();
    if (data.empty()) throw InvalidArgument("em_fit needs a nonempty dataset");

    EmTrace trace;
    ParamSet params = m_step(data, initial_weights(data, config.init));
    trace.iterations.push_back({params, observed_loglik(data, params)});

    for (std::size_t pass = 0; pass < config.max_iters; ++pass) {
        const ParamSet next = m_step(data, e_step(data, params));
        const double change = std::abs(next.theta - params.theta) +
                              std::abs(next.q - params.q) + std::abs(next.gamma - params.gamma);
        params = next;
        trace.iterations.push_back({params, observed_loglik(data, params)});
        if (change <= config.epsilon) {
            trace.converged = true;
            break;
        }
    }
    trace.final = params;
    return trace;
}

RestartSummary em_fit_restarts(std::span<const Observation> data, std::size_t restarts,
                               std::uint64_t seed, double epsilon, std::size_t max_iters) {
    if (restarts < 1) throw InvalidArgument("restarts must be at least 1");
    RestartSummary s;
    detail::Sum theta, q, gamma;
    for (std::size_t r = 0; r < restarts; ++r) {
        EmConfig cfg;
        cfg.epsilon = epsilon;
        cfg.max_iters = max_iters;
        cfg.init = {InitKind::RandomUniform, derive_seed(seed, {r})};
        const EmTrace t = em_fit(data, cfg);
        theta.add(t.final.theta);
        q.add(t.final.q);
        gamma.add(t.final.gamma);
        s.total_passes += t.passes();
        s.all_converged = s.all_converged && t.converged;
    }
    const double n = static_cast<double>(restarts);
    s.mean = {theta.value() / n, q.value() / n, gamma.value() / n};
    s.restarts = restarts;
    return s;
}

std::string_view to_string(M0Policy p) {
    switch (p) {
        case M0Policy::AsService: return "service";
        case M0Policy::AsKab: return "kab";
        case M0Policy::AsSab: return "sab";
        case M0Policy::PiThreshold: return "threshold";
    }
    return "?";
}

ParamSet method1_fit(std::span<const Observation> data, M0Policy policy) {
    if (policy != M0Policy::AsService && policy != M0Policy::AsKab)
        throw InvalidArgument("method 1 resolves uncertain records as service or kab only");
    if (data.empty()) throw InvalidArgument("method 1 needs a nonempty dataset");
    std::size_t events = 0;
    std::size_t censored = 0;
    detail::Sum s_u;
    for (const auto& o : data) {
        s_u.add(o.u());
        const bool abandoned = o.is_uncertain() ? policy == M0Policy::AsKab
                                                : o.delta() == Delta::One;
        ++(abandoned ? events : censored);
    }
    if (events == 0)
        throw NonIdentifiable("theta is not identifiable: no abandonments after relabeling");
    const double total = s_u.value();
    return {static_cast<double>(events) / total, 1.0, static_cast<double>(censored) / total};
}

std::vector<LabeledObservation> resolve_labels(std::span<const Observation> data,
                                               const M0Resolution& resolution) {
    std::vector<LabeledObservation> out;
    out.reserve(data.size());
    for (const auto& o : data) {
        if (!o.is_uncertain()) {
            out.push_back({o, classify_complete(o)});
            continue;
        }
        const CompleteClass c = resolve_uncertain(o, resolution);
        const Delta d = c == CompleteClass::Service ? Delta::Zero : Delta::One;
        out.push_back({Observation::make(o.u(), false, d), c});
    }
    return out;
}

ParamSet method2_fit(std::span<const LabeledObservation> data) {
    std::vector<Observation> obs;
    std::vector<ClassWeights> w;
    obs.reserve(data.size());
    w.reserve(data.size());
    for (const auto& r : data) {
        obs.push_back(r.obs);
        w.push_back(ClassWeights::indicator(r.cls));
    }
    return m_step(obs, w);
}

ParamSet method2_fit(std::span<const Observation> data, const M0Resolution& resolution) {
    const auto labeled = resolve_labels(data, resolution);
    return method2_fit(labeled);
}

}  // namespace sabkit
