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
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "sabkit/config.hpp"
#include "sabkit/csv.hpp"
#include "sabkit/error.hpp"

using namespace sabkit;

namespace {

std::vector<Observation> parse(const std::string& body, double hpu = 1.0) {
    std::istringstream in("u_hours,y,delta,pi\n" + body);
    return parse_observations(in, hpu, "mem");
}

std::string error_of(const std::string& body) {
    try {
        parse(body);
    } catch (const InvalidArgument& e) {
        return e.what();
    }
    return {};
}

ScenarioConfig scenario(const std::string& text) {
    std::istringstream in(text);
    return parse_scenario_config(in, "test.cfg");
}

const std::string kMinimal =
    "lambda = 56\ntheta = 30\nq = 0.7\nn_slots = 9\nmu_sr = 4.878\n";

}  // namespace

TEST_CASE("observation rows") {
    const auto a = parse("0.5,1,1,\n");
    REQUIRE(a.size() == 1);
    CHECK(a[0] == Observation::make(0.5, true, Delta::One));
    const auto b = parse("0.5,0,,0.7\n");
    REQUIRE(b.size() == 1);
    CHECK(b[0] == Observation::make(0.5, false, Delta::Missing, 0.7));
    CHECK(parse("0.5,0,,\n")[0] == Observation::make(0.5, false, Delta::Missing));
    CHECK(parse("0.25,0,0,\r\n\n0.5,0,1,\n").size() == 2);
}

TEST_CASE("observation row errors carry the line number") {
    CHECK(error_of("-1,0,0,\n").rfind("mem:2:", 0) == 0);
    CHECK(error_of("0.5,0,0,\n0,0,0,\n").rfind("mem:3:", 0) == 0);
    CHECK_FALSE(error_of("0.5,1,0,\n").empty());
    CHECK_FALSE(error_of("0.5,0,0,0.3\n").empty());
    CHECK_FALSE(error_of("0.5,2,1,\n").empty());
    CHECK_FALSE(error_of("abc,0,1,\n").empty());
    CHECK_FALSE(error_of("0.5,0,1\n").empty());
    CHECK_FALSE(error_of("0.5,0,,1.5\n").empty());
    std::istringstream bad_header("u,y,delta,pi\n");
    CHECK_THROWS_AS(parse_observations(bad_header), InvalidArgument);
    std::istringstream empty("");
    CHECK_THROWS_AS(parse_observations(empty), InvalidArgument);
}

TEST_CASE("units convert to hours on ingest") {
    CHECK(hours_per_unit("hours") == 1.0);
    CHECK(hours_per_unit("minutes") == 1.0 / 60.0);
    CHECK(hours_per_unit("seconds") == 1.0 / 3600.0);
    CHECK_THROWS_AS(hours_per_unit("days"), InvalidArgument);
    CHECK(parse("30,1,1,\n", 1.0 / 60.0)[0].u() == doctest::Approx(0.5));
}

TEST_CASE("observation CSV round trip") {
    const std::vector<Observation> data = {
        Observation::make(0.5, true, Delta::One), Observation::make(0.125, false, Delta::Zero),
        Observation::make(2.0, false, Delta::Missing, 0.7),
        Observation::make(1.0 / 3.0, false, Delta::Missing)};
    std::ostringstream out;
    write_observations(out, data);
    CHECK(out.str() ==
          "u_hours,y,delta,pi\n0.5,1,1,\n0.125,0,0,\n2,0,,0.7\n0.333333333,0,,\n");
    std::istringstream in(out.str());
    const auto back = parse_observations(in);
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(back[i].u() == doctest::Approx(data[i].u()).epsilon(1e-9));
        CHECK(back[i].delta() == data[i].delta());
        CHECK(back[i].y() == data[i].y());
        CHECK(back[i].pi() == data[i].pi());
    }
}

TEST_CASE("observation files") {
    const auto dir = std::filesystem::temp_directory_path() / "sabkit_test_io";
    std::filesystem::remove_all(dir);
    const auto path = dir / "nested" / "obs.csv";
    const std::vector<Observation> data = {Observation::make(0.5, true, Delta::One)};
    write_observations(path, data);
    CHECK(read_observations(path) == data);
    CHECK(read_observations(path, 2.0)[0].u() == 1.0);
    CHECK_THROWS_AS(read_observations(dir / "missing.csv"), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("number formatting") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0 / 3.0) == "0.333333333");
    CHECK(format_number(1e-12) == "1e-12");
    CHECK(format_number(NAN) == "nan");
    CHECK(format_number(INFINITY) == "inf");
    CHECK(format_number(-INFINITY) == "-inf");
}

TEST_CASE("fit rows, perf rows and rmse tables") {
    CHECK(format_fit_row("em", {4.0, 0.5, 10.0}, 12, true, -1234.5) ==
          "em,4,0.5,10,12,1,-1234.5");
    CHECK(format_fit_row("m1-service", {0.25, 1.0, 0.5}, 0, false, -1.0) ==
          "m1-service,0.25,1,0.5,0,0,-1");
    std::ostringstream perf;
    write_perf_row(perf, 3, {0.5, 0.25, 1.5, 0.125, 0.0625, 1.0});
    CHECK(perf.str() == "3,0.5,0.25,1.5,0.125,0.0625,1\n");
    std::ostringstream rmse;
    const std::vector<RmseRow> rows = {{"model1", Measure::PAb, 0.5}};
    write_rmse(rmse, rows);
    CHECK(rmse.str() == "model,measure,rmse\nmodel1,p_ab,0.5\n");
}

TEST_CASE("record CSV") {
    CustomerRecord served{1.0, 2.0, false, 0.5, Outcome::Served, 1.5, 0.25};
    CustomerRecord kab{1.25, 0.125, true, 0.125, Outcome::Kab, std::nullopt, std::nullopt};
    const std::vector<CustomerRecord> records = {served, kab};
    std::ostringstream out;
    write_records(out, records);
    CHECK(out.str() ==
          "arrival,patience,y,outcome,wait,service_start,service_dur\n"
          "1,2,0,served,0.5,1.5,0.25\n"
          "1.25,0.125,1,kab,0.125,,\n");
}

TEST_CASE("split_csv_line keeps empty fields") {
    const auto f = split_csv_line("a,,b,");
    REQUIRE(f.size() == 4);
    CHECK(f[0] == "a");
    CHECK(f[1].empty());
    CHECK(f[3].empty());
}

TEST_CASE("key value parsing") {
    std::istringstream in("# comment\n a = 1 \n\nb=two # trailing\n");
    const auto kv = parse_key_values(in);
    CHECK(kv.size() == 2);
    CHECK(kv.at("a") == "1");
    CHECK(kv.at("b") == "two");
    std::istringstream dup("a = 1\na = 2\n");
    CHECK_THROWS_AS(parse_key_values(dup), InvalidArgument);
    std::istringstream no_eq("just words\n");
    CHECK_THROWS_AS(parse_key_values(no_eq), InvalidArgument);
}

TEST_CASE("scenario configuration") {
    const auto c = scenario(kMinimal);
    CHECK(c.sim.lambda == 56.0);
    CHECK(c.sim.n_slots == 9);
    CHECK(c.sim.sab_instantaneous());
    CHECK(c.sim.horizon == 720.0);
    CHECK(c.sim.warmup == 2.0);
    CHECK_FALSE(c.p_ss.has_value());
    CHECK(c.replications == 1);

    const auto d = scenario(kMinimal + "mu_sab = 10.7\nmask = 0.15\nreplications = 4\n");
    CHECK(d.sim.mu_sab == 10.7);
    CHECK(d.p_ss.value() == 0.15);
    CHECK(d.replications == 4);
    CHECK(scenario(kMinimal + "mu_sab = inf\n").sim.sab_instantaneous());
}

TEST_CASE("scenario configuration errors") {
    CHECK_THROWS_AS(scenario(kMinimal + "horizon_hours = 1\nwarmup_hours = 2\n"),
                    InvalidArgument);
    CHECK_THROWS_AS(scenario(kMinimal + "colour = blue\n"), InvalidArgument);
    CHECK_THROWS_AS(scenario("lambda = 56\n"), InvalidArgument);
    CHECK_THROWS_AS(scenario(kMinimal + "mask = sometimes\n"), InvalidArgument);
    CHECK_THROWS_AS(scenario(kMinimal + "replications = 0\n"), InvalidArgument);
    CHECK_THROWS_AS(scenario(kMinimal + "mu_sab = -1\n"), InvalidArgument);
}

TEST_CASE("shipped scenario files parse") {
    const std::filesystem::path root = SABKIT_SOURCE_DIR;
    const auto messaging = read_scenario_config(root / "configs" / "messaging.cfg");
    CHECK(messaging.sim.lambda == 753.0);
    CHECK(messaging.sim.n_slots == 452);
    CHECK(messaging.sim.q == 0.332);
    CHECK(messaging.sim.theta == 0.739);
    CHECK(messaging.sim.mu_sr == 1.22);
    const auto yefenof = read_scenario_config(root / "configs" / "yefenof.cfg");
    CHECK(yefenof.sim.theta == 4.0);
    CHECK(yefenof.sim.q == 0.5);
    CHECK_THROWS_AS(read_scenario_config(root / "configs" / "absent.cfg"), IoError);
}
