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

#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "sabkit/domain.hpp"
#include "sabkit/error.hpp"
#include "sabkit/estimators.hpp"
#include "sabkit/random.hpp"
#include "sabkit/simulator.hpp"

using namespace sabkit;

namespace {

Observation served(double u) { return Observation::make(u, false, Delta::Zero); }
Observation kab(double u) { return Observation::make(u, true, Delta::One); }
Observation sab(double u) { return Observation::make(u, false, Delta::One); }
Observation uncertain(double u, std::optional<double> pi = std::nullopt) {
    return Observation::make(u, false, Delta::Missing, pi);
}

std::vector<Observation> observations(const std::vector<LabeledObservation>& data) {
    std::vector<Observation> out;
    for (const auto& d : data) out.push_back(d.obs);
    return out;
}

// Complete-data log-likelihood with hard labels, written out term by term.
double hard_loglik(const std::vector<LabeledObservation>& data, const ParamSet& p) {
    double ll = 0.0;
    for (const auto& d : data) {
        const double u = d.obs.u();
        switch (d.cls) {
            case CompleteClass::Service:
                ll += std::log(p.gamma) - p.gamma * u - p.theta * u;
                break;
            case CompleteClass::KnownAbandonment:
                ll += std::log(p.theta) - p.theta * u - p.gamma * u + std::log(p.q);
                break;
            case CompleteClass::SilentAbandonment:
                ll += std::log(1.0 - p.q) + std::log(1.0 - std::exp(-p.theta * u)) +
                      std::log(p.gamma) - p.gamma * u;
                break;
        }
    }
    return ll;
}

// Partial derivatives of the weighted complete-data log-likelihood.
struct Gradient {
    double theta, q, gamma;
};

Gradient complete_gradient(std::span<const Observation> data,
                           std::span<const ClassWeights> w, const ParamSet& p) {
    Gradient g{0, 0, 0};
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double u = data[i].u();
        const double e = std::exp(-p.theta * u);
        g.theta += -w[i].c1 * u + w[i].c2 * (1.0 / p.theta - u) + w[i].c3 * u * e / (1.0 - e);
        g.q += w[i].c2 / p.q - w[i].c3 / (1.0 - p.q);
        g.gamma += (w[i].c1 + w[i].c3) / p.gamma - u;
    }
    return g;
}

std::vector<Observation> masked_sample(double theta, double gamma, double q, std::size_t n,
                                       std::uint64_t seed, double p_ss) {
    const auto complete = sample_iid(theta, gamma, q, n, seed);
    return mask(complete, p_ss, seed + 1000);
}

}  // namespace

TEST_CASE("loglik_complete of a single served record") {
    const std::vector<Observation> data = {served(1.0)};
    const std::vector<ClassWeights> w = {{1.0, 0.0, 0.0}};
    CHECK(loglik_complete(data, w, {1.0, 0.5, 1.0}) == doctest::Approx(-2.0).epsilon(1e-15));
}

TEST_CASE("loglik_complete of an empty dataset is zero") {
    CHECK(loglik_complete({}, {}, {4.0, 0.5, 10.0}) == 0.0);
}

TEST_CASE("loglik_complete with hard weights matches the complete-data likelihood") {
    const auto data = sample_iid(4.0, 10.0, 0.4, 500, 3);
    std::vector<ClassWeights> w;
    for (const auto& d : data) w.push_back(ClassWeights::indicator(d.cls));
    for (const ParamSet p : {ParamSet{4.0, 0.4, 10.0}, ParamSet{1.3, 0.8, 2.5}}) {
        CHECK(loglik_complete(observations(data), w, p) ==
              doctest::Approx(hard_loglik(data, p)).epsilon(1e-12));
    }
}

TEST_CASE("loglik_complete reports conflicting boundary mass as -infinity") {
    const std::vector<Observation> data = {served(1.0), sab(0.5)};
    const std::vector<ClassWeights> w = {{1, 0, 0}, {0, 0, 1}};
    const double ll = loglik_complete(data, w, {2.0, 1.0, 1.0});
    CHECK(std::isinf(ll));
    CHECK(ll < 0.0);
    const std::vector<Observation> k = {kab(1.0)};
    const std::vector<ClassWeights> wk = {{0, 1, 0}};
    CHECK(std::isinf(loglik_complete(k, wk, {2.0, 0.0, 1.0})));
    // No mass on the conflicting class: finite.
    CHECK(std::isfinite(loglik_complete(k, wk, {2.0, 1.0, 1.0})));
}

TEST_CASE("e_step closed form and hard cases") {
    const std::vector<Observation> data = {uncertain(1.0), kab(0.3), served(0.7),
                                           uncertain(1e-12)};
    const auto w = e_step(data, {0.739, 0.332, 10.0});
    CHECK(w[0].c3 == doctest::Approx(1.0 - std::exp(-0.739)).epsilon(1e-15));
    CHECK(w[0].c3 == doctest::Approx(0.5224).epsilon(1e-4));
    CHECK(w[0].c1 == doctest::Approx(std::exp(-0.739)).epsilon(1e-15));
    CHECK(w[1].c2 == 1.0);
    CHECK(w[1].c1 == 0.0);
    CHECK(w[1].c3 == 0.0);
    CHECK(w[2].c1 == 1.0);
    CHECK(w[3].c3 < 1e-11);
    CHECK(w[3].c1 == doctest::Approx(1.0));
}

TEST_CASE("e_step weights are normalized to 1e-12") {
    const auto data = masked_sample(4.0, 10.0, 0.3, 5000, 4, 0.3);
    Rng rng(5);
    for (int k = 0; k < 20; ++k) {
        const ParamSet p{0.01 + 50.0 * rng.uniform(), rng.uniform(), 0.1 + 20.0 * rng.uniform()};
        for (const auto& w : e_step(data, p)) {
            CHECK(std::abs(w.c1 + w.c2 + w.c3 - 1.0) <= 1e-12);
            CHECK(w.c1 >= 0.0);
            CHECK(w.c3 >= 0.0);
        }
    }
}

TEST_CASE("m_step with all weight on service leaves q unidentifiable") {
    const std::vector<Observation> data = {served(1.0), served(2.0)};
    const std::vector<ClassWeights> w = {{1, 0, 0}, {1, 0, 0}};
    CHECK_THROWS_AS(m_step(data, w), NonIdentifiable);
}

TEST_CASE("m_step with all weight on known abandonment") {
    const std::vector<Observation> data = {kab(0.5), kab(1.0), kab(2.5)};
    const std::vector<ClassWeights> w(3, {0, 1, 0});
    const auto p = m_step(data, w);
    CHECK(p.q == 1.0);
    CHECK(p.gamma == 0.0);
    CHECK(p.at_boundary());
    CHECK(p.theta == doctest::Approx(3.0 / 4.0).epsilon(1e-12));
}

TEST_CASE("m_step on the two-record example") {
    const std::vector<Observation> data = {kab(1.0), served(2.0)};
    const std::vector<ClassWeights> w = {{0, 1, 0}, {1, 0, 0}};
    const auto p = m_step(data, w);
    CHECK(p.q == 1.0);
    CHECK(p.gamma == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(p.theta == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("m_step closed forms on hand-built three-record datasets") {
    SUBCASE("served, known and partially silent") {
        const std::vector<Observation> data = {served(1.0), kab(2.0), uncertain(3.0)};
        const std::vector<ClassWeights> w = {{1, 0, 0}, {0, 1, 0}, {0.4, 0, 0.6}};
        const auto p = m_step(data, w);
        CHECK(p.q == 1.0 / 1.6);
        CHECK(p.gamma == 2.0 / 6.0);
        const std::vector<ThetaTerm> terms = {{1.0, 0, 0}, {2.0, 1, 0}, {3.0, 0, 0.6}};
        CHECK(std::abs(theta_score(terms, p.theta)) < kThetaResidualTolerance);
    }
    SUBCASE("two silent and one served") {
        const std::vector<Observation> data = {sab(0.5), sab(1.5), served(2.0)};
        const std::vector<ClassWeights> w = {{0, 0, 1}, {0, 0, 1}, {1, 0, 0}};
        const auto p = m_step(data, w);
        CHECK(p.q == 0.0);
        CHECK(p.gamma == 3.0 / 4.0);
    }
    SUBCASE("known, known and served") {
        const std::vector<Observation> data = {kab(0.25), kab(0.75), served(1.0)};
        const std::vector<ClassWeights> w = {{0, 1, 0}, {0, 1, 0}, {1, 0, 0}};
        const auto p = m_step(data, w);
        CHECK(p.q == 1.0);
        CHECK(p.gamma == 1.0 / 2.0);
        CHECK(p.theta == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("m_step output is stationary") {
    const auto data = masked_sample(4.0, 10.0, 0.5, 3000, 6, 0.5);
    const auto w = e_step(data, {3.0, 0.4, 8.0});
    const auto p = m_step(data, w);
    const auto g = complete_gradient(data, w, p);
    const double n = static_cast<double>(data.size());
    CHECK(std::abs(g.theta) / n < 1e-8);
    CHECK(std::abs(g.q) / n < 1e-8);
    CHECK(std::abs(g.gamma) / n < 1e-8);
    // Central differences of the likelihood itself agree.
    const double h = 1e-6;
    auto ll = [&](ParamSet x) { return loglik_complete(data, w, x); };
    const double d_theta =
        (ll({p.theta + h, p.q, p.gamma}) - ll({p.theta - h, p.q, p.gamma})) / (2 * h);
    const double d_gamma =
        (ll({p.theta, p.q, p.gamma + h}) - ll({p.theta, p.q, p.gamma - h})) / (2 * h);
    CHECK(std::abs(d_theta) / n < 1e-5);
    CHECK(std::abs(d_gamma) / n < 1e-5);
}

TEST_CASE("solve_theta recovers the linear closed form") {
    Rng rng(8);
    std::vector<ThetaTerm> terms;
    double c2 = 0.0, u = 0.0;
    for (int i = 0; i < 100; ++i) {
        const ThetaTerm t{rng.exponential(3.0), rng.uniform(), 0.0};
        c2 += t.c2;
        u += t.u;
        terms.push_back(t);
    }
    CHECK(solve_theta(terms) == doctest::Approx(c2 / u).epsilon(1e-9));
}

TEST_CASE("solve_theta finds ln 2 for one silent and one served unit record") {
    // -theta + theta e^{-theta} / (1 - e^{-theta}) = 0  <=>  e^{-theta} = 1/2.
    const std::vector<ThetaTerm> terms = {{1.0, 0.0, 1.0}, {1.0, 0.0, 0.0}};
    const double t = solve_theta(terms);
    CHECK(t == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(std::abs(theta_score(terms, t)) < kThetaResidualTolerance);
}

TEST_CASE("solve_theta reports a lone silent abandonment as unidentifiable") {
    // The score stays positive for every theta: the likelihood increases
    // without bound.
    const std::vector<ThetaTerm> terms = {{1.0, 0.0, 1.0}};
    for (double t : {1e-6, 1.0, 100.0}) CHECK(theta_score(terms, t) > 0.0);
    CHECK_THROWS_AS(solve_theta(terms), NonIdentifiable);
    CHECK_THROWS_AS(solve_theta(std::vector<ThetaTerm>{{1.0, 0.0, 0.0}}), NonIdentifiable);
}

TEST_CASE("solve_theta residual and unit equivariance on random weights") {
    Rng rng(9);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<ThetaTerm> terms, scaled;
        const double k = 0.01 + 100.0 * rng.uniform();
        for (int i = 0; i < 200; ++i) {
            const double u = rng.exponential(5.0);
            const double r = rng.uniform();
            ThetaTerm t{u, 0.0, 0.0};
            if (r < 0.2)
                t.c2 = 1.0;
            else if (r < 0.5)
                t.c3 = rng.uniform();
            terms.push_back(t);
            scaled.push_back({u * k, t.c2, t.c3});
        }
        const double theta = solve_theta(terms);
        CHECK(std::abs(theta_score(terms, theta)) < kThetaResidualTolerance);
        CHECK(solve_theta(scaled) == doctest::Approx(theta / k).epsilon(1e-9));
    }
}

TEST_CASE("EmConfig validation and init parsing") {
    CHECK_THROWS_AS((EmConfig{0.0, 10, {}}).check(), InvalidArgument);
    CHECK_THROWS_AS((EmConfig{1e-6, 0, {}}).check(), InvalidArgument);
    for (auto k : {InitKind::AllSab, InitKind::AllSr, InitKind::FiftyFifty, InitKind::FromPi,
                   InitKind::RandomUniform})
        CHECK(parse_init_kind(to_string(k)) == k);
    CHECK_THROWS_AS(parse_init_kind("bogus"), InvalidArgument);
}

TEST_CASE("initial weights per variant") {
    const std::vector<Observation> data = {uncertain(1.0, 0.2), kab(1.0), uncertain(2.0, 0.9),
                                           served(1.0), uncertain(0.5, 0.4)};
    auto c3 = [&](InitKind k) {
        std::vector<double> out;
        for (const auto& w : initial_weights(data, {k, 3})) out.push_back(w.c3);
        return out;
    };
    CHECK(c3(InitKind::AllSab) == std::vector<double>{1, 0, 1, 0, 1});
    CHECK(c3(InitKind::AllSr) == std::vector<double>{0, 0, 0, 0, 0});
    CHECK(c3(InitKind::FiftyFifty) == std::vector<double>{1, 0, 0, 0, 1});
    CHECK(c3(InitKind::FromPi) == std::vector<double>{0.2, 0, 0.9, 0, 0.4});
    const auto r = c3(InitKind::RandomUniform);
    CHECK(r[1] == 0.0);
    CHECK(r[3] == 0.0);
    for (double v : r) CHECK((v >= 0.0 && v <= 1.0));
    for (const auto& w : initial_weights(data, {InitKind::RandomUniform, 3}))
        CHECK(w.normalized());
    const std::vector<Observation> no_pi = {uncertain(1.0), kab(1.0)};
    CHECK_THROWS_AS(initial_weights(no_pi, {InitKind::FromPi, 0}), InvalidArgument);
}

TEST_CASE("em_fit without uncertain records equals Method 2") {
    const auto complete = sample_iid(4.0, 10.0, 0.6, 2000, 10);
    std::vector<Observation> data;
    for (const auto& d : complete) data.push_back(d.obs);
    const auto trace = em_fit(data, {});
    const auto m2 = method2_fit(complete);
    CHECK(trace.converged);
    CHECK(trace.passes() == 1);
    CHECK(trace.final.theta == doctest::Approx(m2.theta).epsilon(1e-12));
    CHECK(trace.final.q == doctest::Approx(m2.q).epsilon(1e-12));
    CHECK(trace.final.gamma == doctest::Approx(m2.gamma).epsilon(1e-12));
}

TEST_CASE("observed log-likelihood never decreases along EM iterations") {
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        for (double q : {0.1, 0.5, 0.9}) {
            const auto data = masked_sample(4.0, 10.0, q, 2000, seed, 1.0 - q);
            for (auto kind : {InitKind::AllSab, InitKind::AllSr, InitKind::FiftyFifty,
                              InitKind::RandomUniform}) {
                const auto trace = em_fit(data, {1e-9, 10000, {kind, seed}});
                CHECK(trace.converged);
                for (std::size_t t = 1; t < trace.iterations.size(); ++t) {
                    CHECK(trace.iterations[t].observed_loglik >=
                          trace.iterations[t - 1].observed_loglik - 1e-9);
                }
            }
        }
    }
}

TEST_CASE("em_fit flags non-convergence at the iteration cap") {
    const auto data = masked_sample(4.0, 10.0, 0.3, 2000, 14, 0.7);
    const auto trace = em_fit(data, {1e-15, 2, {InitKind::AllSr, 0}});
    CHECK_FALSE(trace.converged);
    CHECK(trace.passes() == 2);
}

TEST_CASE("em_fit fixed point satisfies the score equations") {
    const auto data = masked_sample(4.0, 10.0, 0.4, 2000, 15, 0.6);
    const auto trace = em_fit(data, {1e-12, 10000, {InitKind::AllSab, 0}});
    REQUIRE(trace.converged);
    const auto w = e_step(data, trace.final);
    std::vector<ThetaTerm> terms;
    for (std::size_t i = 0; i < data.size(); ++i) terms.push_back({data[i].u(), w[i].c2, w[i].c3});
    CHECK(std::abs(theta_score(terms, trace.final.theta)) < 1e-6);
}

TEST_CASE("EM initialization variants agree") {
    const auto complete = sample_iid(4.0, 10.0, 0.5, 2000, 16);
    const auto data = mask(complete, 0.5, 17);
    const auto ref = em_fit(data, {1e-6, 10000, {InitKind::AllSab, 0}}).final;
    for (auto kind : {InitKind::AllSr, InitKind::FiftyFifty, InitKind::RandomUniform}) {
        const auto p = em_fit(data, {1e-6, 10000, {kind, 99}}).final;
        CHECK(std::abs(p.theta - ref.theta) < 1e-3);
        CHECK(std::abs(p.q - ref.q) < 1e-3);
        CHECK(std::abs(p.gamma - ref.gamma) < 1e-3);
    }
}

TEST_CASE("em_fit_restarts averages converged fits") {
    const auto data = masked_sample(4.0, 10.0, 0.5, 1000, 18, 0.5);
    const auto s = em_fit_restarts(data, 5, 3);
    CHECK(s.restarts == 5);
    CHECK(s.all_converged);
    const auto single = em_fit(data, {1e-6, 10000, {InitKind::AllSab, 0}}).final;
    CHECK(std::abs(s.mean.theta - single.theta) < 1e-3);
    CHECK_THROWS_AS(em_fit_restarts(data, 0, 3), InvalidArgument);
}

TEST_CASE("EM recovers theta on i.i.d. masked data") {
    double sum = 0.0;
    const int reps = 20;
    for (int r = 0; r < reps; ++r) {
        const auto data = masked_sample(4.0, 10.0, 0.5, 2000, 100 + r, 0.5);
        sum += em_fit(data, {}).final.theta;
    }
    CHECK(sum / reps == doctest::Approx(4.0).epsilon(0.03));
}

TEST_CASE("Method 1 single known abandonment") {
    const std::vector<Observation> data = {kab(2.0)};
    const auto p = method1_fit(data, M0Policy::AsService);
    CHECK(p.theta == 0.5);
    CHECK(p.q == 1.0);
}

TEST_CASE("Method 1 on service-only data is unidentifiable") {
    const std::vector<Observation> data = {served(1.0), served(2.0), uncertain(1.0)};
    CHECK_THROWS_AS(method1_fit(data, M0Policy::AsService), NonIdentifiable);
    const auto p = method1_fit(data, M0Policy::AsKab);
    CHECK(p.theta == doctest::Approx(1.0 / 4.0));
    CHECK(p.gamma == doctest::Approx(2.0 / 4.0));
    CHECK_THROWS_AS(method1_fit(data, M0Policy::AsSab), InvalidArgument);
}

TEST_CASE("Method 1 counts complete silent abandonments as events") {
    const std::vector<Observation> data = {sab(1.0), kab(1.0), served(2.0)};
    const auto p = method1_fit(data, M0Policy::AsService);
    CHECK(p.theta == doctest::Approx(2.0 / 4.0));
    CHECK(p.gamma == doctest::Approx(1.0 / 4.0));
}

TEST_CASE("Method 2 with every record a known abandonment") {
    std::vector<LabeledObservation> data;
    for (double u : {0.1, 0.4, 0.5}) data.push_back({kab(u), CompleteClass::KnownAbandonment});
    const auto p = method2_fit(data);
    CHECK(p.theta == doctest::Approx(3.0 / 1.0).epsilon(1e-12));
    CHECK(p.q == 1.0);
}

TEST_CASE("Method 2 policies resolve uncertain records") {
    const std::vector<Observation> data = {uncertain(1.0, 0.8), uncertain(2.0, 0.2), kab(0.5),
                                           served(1.5)};
    const auto labels = resolve_labels(data, {M0Policy::PiThreshold, 0.5});
    CHECK(labels[0].cls == CompleteClass::SilentAbandonment);
    CHECK(labels[1].cls == CompleteClass::Service);
    CHECK(labels[2].cls == CompleteClass::KnownAbandonment);
    CHECK(labels[3].cls == CompleteClass::Service);
    const auto as_sab = resolve_labels(data, {M0Policy::AsSab, 0.5});
    CHECK(as_sab[1].cls == CompleteClass::SilentAbandonment);
    CHECK_THROWS_AS(resolve_labels(data, {M0Policy::AsKab, 0.5}), InvalidArgument);
    const std::vector<Observation> no_pi = {uncertain(1.0), kab(0.5)};
    CHECK_THROWS_AS(resolve_labels(no_pi, {M0Policy::PiThreshold, 0.5}), InvalidArgument);
}

TEST_CASE("Method 2 with uncertain records as silent overestimates theta") {
    double sum = 0.0;
    const int reps = 10;
    for (int r = 0; r < reps; ++r) {
        const auto data = masked_sample(4.0, 10.0, 0.5, 2000, 200 + r, 0.5);
        sum += method2_fit(data, {M0Policy::AsSab, 0.5}).theta;
    }
    CHECK(sum / reps > 4.4);
}

TEST_CASE("without silent abandonment all methods agree") {
    const auto complete = sample_iid(4.0, 10.0, 1.0, 5000, 19);
    const auto data = observations(complete);
    const double em = em_fit(data, {}).final.theta;
    const double m1 = method1_fit(data, M0Policy::AsService).theta;
    const double m2 = method2_fit(complete).theta;
    CHECK(em == doctest::Approx(m2).epsilon(1e-9));
    CHECK(m1 == doctest::Approx(m2).epsilon(1e-9));
}
