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

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sabkit/simulator.hpp"

namespace sabkit {

// One population segment of conversations. los is the mean length of stay in
// minutes; work_fraction is the share of it an agent is actually working.
struct EffortSegment {
    double share = 0.0;
    double los = 0.0;
    double work_fraction = 1.0;
    bool is_sab = false;
};

/// Fraction of agent work time spent on silent abandonments:
///   sum_sab share * los / sum_all share * los * work_fraction.
/// Shares must sum to 1 within 1e-9.
double effort(std::span<const EffortSegment> segments);

/// Indication probability from observable proportions:
///   q = p_c2 / (p_c3_given_m0 * p_m0 + p_c2).
double q_from_proportions(double p_c2, double p_m0, double p_c3_given_m0);

enum class Measure { PWait, PAb, EQueue, EWait, EWaitServed };

inline constexpr std::array<Measure, 5> kAllMeasures = {
    Measure::PWait, Measure::PAb, Measure::EQueue, Measure::EWait, Measure::EWaitServed};

std::string_view to_string(Measure m);
double measure_value(const PerfMeasures& p, Measure m);

struct RmseRow {
    std::string model;
    Measure measure;
    double rmse = 0.0;
};

/// Root mean squared difference per model and measure against an
/// index-aligned reference series. Rows come out ordered by model id, then
/// by measure.
std::vector<RmseRow> rmse_compare(std::span<const PerfMeasures> reference,
                                  const std::map<std::string, std::vector<PerfMeasures>>& candidates);

}  // namespace sabkit
