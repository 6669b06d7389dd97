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

#include "sabkit/analytics.hpp"

#include <cmath>

#include "numeric.hpp"
#include "sabkit/error.hpp"

namespace sabkit {

namespace {

bool probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

double effort(std::span<const EffortSegment> segments) {
    if (segments.empty()) throw InvalidArgument("effort needs at least one segment");
    detail::Sum shares, sab, total;
    for (const auto& s : segments) {
        if (!probability(s.share)) throw InvalidArgument("segment share must lie in [0, 1]");
        if (!(s.los >= 0.0) || !std::isfinite(s.los))
            throw InvalidArgument("segment los must be nonnegative");
        if (!(s.work_fraction > 0.0 && s.work_fraction <= 1.0))
            throw InvalidArgument("work_fraction must lie in (0, 1]");
        shares.add(s.share);
        const double time = s.share * s.los;
        if (s.is_sab) sab.add(time);
        total.add(time * s.work_fraction);
    }
    if (std::abs(shares.value() - 1.0) > 1e-9)
        throw InvalidArgument("segment shares must sum to 1");
    if (!(total.value() > 0.0)) throw InvalidArgument("effort denominator is zero");
    return sab.value() / total.value();
}

double q_from_proportions(double p_c2, double p_m0, double p_c3_given_m0) {
    if (!probability(p_c2) || !probability(p_m0) || !probability(p_c3_given_m0))
        throw InvalidArgument("proportions must lie in [0, 1]");
    const double denom = p_c3_given_m0 * p_m0 + p_c2;
    if (!(denom > 0.0)) throw InvalidArgument("no abandonment: q is undefined");
    return p_c2 / denom;
}

std::string_view to_string(Measure m) {
    switch (m) {
        case Measure::PWait: return "p_wait";
        case Measure::PAb: return "p_ab";
        case Measure::EQueue: return "e_queue";
        case Measure::EWait: return "e_wait";
        case Measure::EWaitServed: return "e_wait_served";
    }
    return "?";
}

double measure_value(const PerfMeasures& p, Measure m) {
    switch (m) {
        case Measure::PWait: return p.p_wait;
        case Measure::PAb: return p.p_ab;
        case Measure::EQueue: return p.e_queue;
        case Measure::EWait: return p.e_wait;
        case Measure::EWaitServed: return p.e_wait_served;
    }
    return 0.0;
}

std::vector<RmseRow> rmse_compare(
    std::span<const PerfMeasures> reference,
    const std::map<std::string, std::vector<PerfMeasures>>& candidates) {
    if (reference.empty()) throw InvalidArgument("reference series is empty");
    std::vector<RmseRow> rows;
    for (const auto& [model, series] : candidates) {
        if (series.size() != reference.size())
            throw InvalidArgument("series length mismatch for model " + model);
        for (Measure m : kAllMeasures) {
            detail::Sum sq;
            for (std::size_t i = 0; i < series.size(); ++i) {
                const double d = measure_value(series[i], m) - measure_value(reference[i], m);
                sq.add(d * d);
            }
            rows.push_back({model, m, std::sqrt(sq.value() / static_cast<double>(series.size()))});
        }
    }
    return rows;
}

}  // namespace sabkit
