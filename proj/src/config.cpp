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

#include "sabkit/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <set>

#include "sabkit/error.hpp"

namespace sabkit {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& value) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size() || value.empty())
        throw InvalidArgument("config key '" + key + "': not a number: '" + value + "'");
    return v;
}

std::size_t to_count(const std::string& key, const std::string& value) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size() || value.empty())
        throw InvalidArgument("config key '" + key + "': not a nonnegative integer: '" + value +
                              "'");
    return v;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::istream& in, std::string_view source) {
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view s = line;
        if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        const std::string at = std::string(source) + ":" + std::to_string(lineno) + ": ";
        const auto eq = s.find('=');
        if (eq == std::string_view::npos) throw InvalidArgument(at + "expected 'key = value'");
        const std::string key(trim(s.substr(0, eq)));
        const std::string value(trim(s.substr(eq + 1)));
        if (key.empty() || value.empty()) throw InvalidArgument(at + "empty key or value");
        if (!out.emplace(key, value).second)
            throw InvalidArgument(at + "duplicate key '" + key + "'");
    }
    return out;
}

ScenarioConfig parse_scenario_config(std::istream& in, std::string_view source) {
    const auto kv = parse_key_values(in, source);
    static const std::set<std::string> known = {"lambda",        "theta",        "q",
                                                "n_slots",       "mu_sr",        "mu_sab",
                                                "horizon_hours", "warmup_hours", "mask",
                                                "replications"};
    for (const auto& [key, value] : kv)
        if (!known.count(key))
            throw InvalidArgument(std::string(source) + ": unknown key '" + key + "'");
    for (const char* key : {"lambda", "theta", "q", "n_slots", "mu_sr"})
        if (!kv.count(key))
            throw InvalidArgument(std::string(source) + ": missing key '" + key + "'");

    ScenarioConfig cfg;
    SimConfig& sim = cfg.sim;
    sim.lambda = to_double("lambda", kv.at("lambda"));
    sim.theta = to_double("theta", kv.at("theta"));
    sim.q = to_double("q", kv.at("q"));
    sim.n_slots = to_count("n_slots", kv.at("n_slots"));
    sim.mu_sr = to_double("mu_sr", kv.at("mu_sr"));
    if (auto it = kv.find("mu_sab"); it != kv.end())
        sim.mu_sab = it->second == "inf" ? SimConfig::kInstantaneous
                                         : to_double("mu_sab", it->second);
    if (auto it = kv.find("horizon_hours"); it != kv.end())
        sim.horizon = to_double("horizon_hours", it->second);
    if (auto it = kv.find("warmup_hours"); it != kv.end())
        sim.warmup = to_double("warmup_hours", it->second);
    if (auto it = kv.find("mask"); it != kv.end() && it->second != "indication") {
        cfg.p_ss = to_double("mask", it->second);
        if (!(*cfg.p_ss >= 0.0 && *cfg.p_ss <= 1.0))
            throw InvalidArgument("config key 'mask': probability must lie in [0, 1]");
    }
    if (auto it = kv.find("replications"); it != kv.end())
        cfg.replications = to_count("replications", it->second);
    if (cfg.replications < 1) throw InvalidArgument("config key 'replications' must be >= 1");
    try {
        sim.check();
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(std::string(source) + ": " + e.what());
    }
    return cfg;
}

ScenarioConfig read_scenario_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_scenario_config(in, path.string());
}

}  // namespace sabkit
