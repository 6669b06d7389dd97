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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "sabkit/simulator.hpp"

namespace sabkit {

/// Flat `key = value` text. '#' starts a comment anywhere on a line; blank
/// lines are ignored; duplicate keys are an error.
std::map<std::string, std::string> parse_key_values(std::istream& in,
                                                    std::string_view source = "<config>");

/// Simulation scenario file. Keys (rates per hour, durations in hours):
///
///   lambda          arrival rate                      required
///   theta           patience rate                     required
///   q               indication probability            required
///   n_slots         service slots                     required
///   mu_sr           service rate of served customers  required
///   mu_sab          service rate of silent abandonments, or `inf`
///                   for zero-length phantom service   default inf
///   horizon_hours   simulated time                    default 720
///   warmup_hours    excluded start-up period          default 2
///   mask            `indication` (served customers without an indication
///                   lose their delta) or a short-service probability
///                                                     default indication
///   replications    independent runs                  default 1
///
/// Unknown keys are rejected.
struct ScenarioConfig {
    SimConfig sim;
    std::optional<double> p_ss;  // empty: mask by indication
    std::size_t replications = 1;
};

ScenarioConfig parse_scenario_config(std::istream& in, std::string_view source = "<config>");
ScenarioConfig read_scenario_config(const std::filesystem::path& path);

}  // namespace sabkit
