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

#include "sabkit/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "sabkit/error.hpp"

namespace sabkit {

double hours_per_unit(std::string_view unit) {
    if (unit == "hours") return 1.0;
    if (unit == "minutes") return 1.0 / 60.0;
    if (unit == "seconds") return 1.0 / 3600.0;
    throw InvalidArgument("unknown time unit '" + std::string(unit) + "'");
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

namespace {

std::string where(std::string_view source, std::size_t line) {
    return std::string(source) + ":" + std::to_string(line) + ": ";
}

double parse_double(std::string_view s, std::string_view what, const std::string& at) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw InvalidArgument(at + "cannot parse " + std::string(what) + " '" + std::string(s) +
                              "'");
    return v;
}

int parse_flag(std::string_view s, std::string_view what, const std::string& at) {
    if (s == "0") return 0;
    if (s == "1") return 1;
    throw InvalidArgument(at + std::string(what) + " must be 0 or 1, got '" + std::string(s) +
                          "'");
}

std::string_view chomp(std::string_view s) {
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    return s;
}

}  // namespace

std::vector<Observation> parse_observations(std::istream& in, double hours_per_unit,
                                            std::string_view source) {
    if (!(hours_per_unit > 0.0)) throw InvalidArgument("hours_per_unit must be positive");
    std::vector<Observation> out;
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw InvalidArgument(where(source, 1) + "missing header");
    ++lineno;
    if (chomp(line) != kObservationHeader)
        throw InvalidArgument(where(source, 1) + "expected header '" +
                              std::string(kObservationHeader) + "'");
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view row = chomp(line);
        if (row.empty()) continue;
        const std::string at = where(source, lineno);
        const auto f = split_csv_line(row);
        if (f.size() != 4) throw InvalidArgument(at + "expected 4 fields");
        const double u = parse_double(f[0], "u", at);
        const int y = parse_flag(f[1], "y", at);
        Delta delta = Delta::Missing;
        if (!f[2].empty()) delta = parse_flag(f[2], "delta", at) ? Delta::One : Delta::Zero;
        std::optional<double> pi;
        if (!f[3].empty()) pi = parse_double(f[3], "pi", at);
        try {
            out.push_back(Observation::make(u * hours_per_unit, y == 1, delta, pi));
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(at + e.what());
        }
    }
    return out;
}

std::vector<Observation> read_observations(const std::filesystem::path& path,
                                           double hours_per_unit) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_observations(in, hours_per_unit, path.string());
}

void write_observations(std::ostream& out, std::span<const Observation> data) {
    out << kObservationHeader << '\n';
    for (const auto& o : data) {
        out << format_number(o.u()) << ',' << (o.y() ? 1 : 0) << ',';
        if (o.delta() != Delta::Missing) out << (o.delta() == Delta::One ? 1 : 0);
        out << ',';
        if (o.pi()) out << format_number(*o.pi());
        out << '\n';
    }
}

void write_observations(const std::filesystem::path& path, std::span<const Observation> data) {
    auto out = open_output(path);
    write_observations(out, data);
}

void write_records(std::ostream& out, std::span<const CustomerRecord> records) {
    out << kRecordHeader << '\n';
    for (const auto& r : records) {
        out << format_number(r.arrival) << ',' << format_number(r.patience) << ','
            << (r.indication ? 1 : 0) << ',' << to_string(r.outcome) << ','
            << format_number(r.wait) << ',';
        if (r.service_start) out << format_number(*r.service_start);
        out << ',';
        if (r.service_duration) out << format_number(*r.service_duration);
        out << '\n';
    }
}

std::string format_fit_row(std::string_view method, const ParamSet& params, std::size_t iterations,
                           bool converged, double loglik) {
    std::string row(method);
    row += ',' + format_number(params.theta) + ',' + format_number(params.q) + ',' +
           format_number(params.gamma) + ',' + std::to_string(iterations) + ',' +
           (converged ? "1" : "0") + ',' + format_number(loglik);
    return row;
}

void write_perf_row(std::ostream& out, std::size_t replication, const PerfMeasures& m) {
    out << replication << ',' << format_number(m.p_wait) << ',' << format_number(m.p_ab) << ','
        << format_number(m.e_queue) << ',' << format_number(m.e_wait) << ','
        << format_number(m.e_wait_served) << ',' << format_number(m.e_queue_true) << '\n';
}

void write_rmse(std::ostream& out, std::span<const RmseRow> rows) {
    out << kRmseHeader << '\n';
    for (const auto& r : rows)
        out << r.model << ',' << to_string(r.measure) << ',' << format_number(r.rmse) << '\n';
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

}  // namespace sabkit
