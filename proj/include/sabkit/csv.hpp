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

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sabkit/analytics.hpp"
#include "sabkit/domain.hpp"
#include "sabkit/simulator.hpp"

namespace sabkit {

inline constexpr std::string_view kObservationHeader = "u_hours,y,delta,pi";
inline constexpr std::string_view kRecordHeader =
    "arrival,patience,y,outcome,wait,service_start,service_dur";
inline constexpr std::string_view kFitHeader = "method,theta,q,gamma,iterations,converged,loglik";
inline constexpr std::string_view kPerfHeader =
    "replication,p_wait,p_ab,e_queue,e_wait,e_wait_served,e_queue_true";
inline constexpr std::string_view kRmseHeader = "model,measure,rmse";

// Hours per unit of the u column on ingest.
double hours_per_unit(std::string_view unit);

// %.9g; "nan" and "inf" spelled out.
std::string format_number(double v);

/// Parses the observation CSV. Each u value is multiplied by hours_per_unit.
/// Errors carry the source name and 1-based line number.
std::vector<Observation> parse_observations(std::istream& in, double hours_per_unit = 1.0,
                                            std::string_view source = "<input>");
std::vector<Observation> read_observations(const std::filesystem::path& path,
                                           double hours_per_unit = 1.0);

void write_observations(std::ostream& out, std::span<const Observation> data);
void write_observations(const std::filesystem::path& path, std::span<const Observation> data);

void write_records(std::ostream& out, std::span<const CustomerRecord> records);

std::string format_fit_row(std::string_view method, const ParamSet& params, std::size_t iterations,
                           bool converged, double loglik);

void write_perf_row(std::ostream& out, std::size_t replication, const PerfMeasures& m);

void write_rmse(std::ostream& out, std::span<const RmseRow> rows);

// Opens a file for writing, creating parent directories; throws IoError.
std::ofstream open_output(const std::filesystem::path& path);

// Splits one CSV line on commas (no quoting).
std::vector<std::string_view> split_csv_line(std::string_view line);

}  // namespace sabkit
