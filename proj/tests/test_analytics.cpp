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
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "sabkit/analytics.hpp"
#include "sabkit/error.hpp"

using namespace sabkit;

namespace {

double round_to(double v, int digits) {
    const double f = std::pow(10.0, digits);
    return std::round(v * f) / f;
}

std::vector<PerfMeasures> series(std::size_t n, double base) {
    std::vector<PerfMeasures> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = base + 0.1 * static_cast<double>(i);
        out.push_back({0.1 * x, 0.05 * x, x, 0.01 * x, 0.008 * x, 0.9 * x});
    }
    return out;
}

}  // namespace

TEST_CASE("effort on the published chat and messaging inputs") {
    const std::vector<EffortSegment> chat = {{0.07, 4.32, 1.0, true}, {0.93, 12.25, 0.49, false}};
    CHECK(round_to(effort(chat), 2) == doctest::Approx(0.05));
    const std::vector<EffortSegment> messaging = {{0.155, 19.37, 1.0, true},
                                                  {0.127, 55.63, 1.0, false},
                                                  {0.718, 49.2, 0.4891, false}};
    CHECK(round_to(effort(messaging), 2) == doctest::Approx(0.11));
}

TEST_CASE("effort without silent abandonment is zero") {
    const std::vector<EffortSegment> s = {{0.0, 4.0, 1.0, true}, {1.0, 12.0, 0.5, false}};
    CHECK(effort(s) == 0.0);
    const std::vector<EffortSegment> no_sab = {{1.0, 12.0, 0.5, false}};
    CHECK(effort(no_sab) == 0.0);
}

TEST_CASE("effort rejects invalid segments") {
    const std::vector<EffortSegment> bad_share = {{0.5, 4.0, 1.0, true}, {0.4, 12.0, 0.5, false}};
    CHECK_THROWS_AS(effort(bad_share), InvalidArgument);
    const std::vector<EffortSegment> zero = {{1.0, 0.0, 1.0, true}};
    CHECK_THROWS_AS(effort(zero), InvalidArgument);
    const std::vector<EffortSegment> neg_los = {{1.0, -1.0, 1.0, false}};
    CHECK_THROWS_AS(effort(neg_los), InvalidArgument);
    CHECK_THROWS_AS(effort(std::vector<EffortSegment>{}), InvalidArgument);
}

TEST_CASE("effort increases with silent share and length of stay") {
    double last = -1.0;
    for (double share = 0.0; share <= 0.9; share += 0.05) {
        const std::vector<EffortSegment> s = {{share, 5.0, 1.0, true},
                                              {1.0 - share, 12.0, 0.5, false}};
        const double e = effort(s);
        CHECK(e > last);
        last = e;
    }
    last = -1.0;
    for (double los = 0.0; los <= 30.0; los += 1.0) {
        const std::vector<EffortSegment> s = {{0.1, los, 1.0, true}, {0.9, 12.0, 0.5, false}};
        const double e = effort(s);
        CHECK(e > last);
        last = e;
    }
}

TEST_CASE("q from observable proportions") {
    CHECK(round_to(q_from_proportions(0.0716, 0.2616, 0.55), 3) == doctest::Approx(0.332));
    CHECK(q_from_proportions(0.2, 0.7, 0.0) == 1.0);
    CHECK(q_from_proportions(0.0, 0.3, 0.5) == 0.0);
    CHECK_THROWS_AS(q_from_proportions(0.0, 0.3, 0.0), InvalidArgument);
    CHECK_THROWS_AS(q_from_proportions(1.2, 0.3, 0.5), InvalidArgument);
}

TEST_CASE("q decreases in the silent share and the uncertain proportion") {
    double last = 2.0;
    for (double s = 0.0; s <= 1.0; s += 0.1) {
        const double q = q_from_proportions(0.07, 0.26, s);
        CHECK(q < last);
        last = q;
    }
    last = 2.0;
    for (double m0 = 0.0; m0 <= 0.9; m0 += 0.1) {
        const double q = q_from_proportions(0.07, m0, 0.55);
        CHECK(q < last);
        last = q;
    }
}

TEST_CASE("rmse is zero on self comparison") {
    const auto ref = series(24, 1.0);
    const auto rows = rmse_compare(ref, {{"self", ref}});
    CHECK(rows.size() == kAllMeasures.size());
    for (const auto& r : rows) CHECK(r.rmse == 0.0);
}

TEST_CASE("a constant offset on one measure gives its absolute value") {
    const auto ref = series(24, 1.0);
    auto cand = ref;
    for (auto& m : cand) m.e_wait -= 0.25;
    for (const auto& r : rmse_compare(ref, {{"shifted", cand}})) {
        if (r.measure == Measure::EWait)
            CHECK(r.rmse == doctest::Approx(0.25).epsilon(1e-12));
        else
            CHECK(r.rmse == 0.0);
    }
}

TEST_CASE("rmse matches a direct computation and ignores candidate order") {
    const auto ref = series(10, 1.0);
    const auto a = series(10, 1.3);
    const auto b = series(10, 0.4);
    const auto ab = rmse_compare(ref, {{"a", a}, {"b", b}});
    const auto ba = rmse_compare(ref, {{"b", b}, {"a", a}});
    REQUIRE(ab.size() == ba.size());
    for (std::size_t i = 0; i < ab.size(); ++i) {
        CHECK(ab[i].model == ba[i].model);
        CHECK(ab[i].rmse == ba[i].rmse);
    }
    for (const auto& r : ab) {
        const auto& cand = r.model == "a" ? a : b;
        double s = 0.0;
        for (std::size_t i = 0; i < ref.size(); ++i) {
            const double d = measure_value(cand[i], r.measure) - measure_value(ref[i], r.measure);
            s += d * d;
        }
        CHECK(r.rmse == doctest::Approx(std::sqrt(s / ref.size())).epsilon(1e-12));
    }
}

TEST_CASE("rmse rejects misaligned series") {
    const auto ref = series(10, 1.0);
    CHECK_THROWS_AS(rmse_compare(ref, {{"short", series(9, 1.0)}}), InvalidArgument);
}

TEST_CASE("measure names") {
    CHECK(to_string(Measure::PWait) == "p_wait");
    CHECK(to_string(Measure::PAb) == "p_ab");
    CHECK(to_string(Measure::EQueue) == "e_queue");
    CHECK(to_string(Measure::EWait) == "e_wait");
    CHECK(to_string(Measure::EWaitServed) == "e_wait_served");
}
