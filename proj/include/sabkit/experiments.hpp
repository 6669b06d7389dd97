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
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sabkit/analytics.hpp"
#include "sabkit/config.hpp"
#include "sabkit/domain.hpp"
#include "sabkit/estimators.hpp"
#include "sabkit/simulator.hpp"

namespace sabkit {

enum class ExperimentKind { Accuracy, Sensitivity, Robustness, QueueFit, Scenario };

std::string_view to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(std::string_view s);

// Ground truth and candidate layout of the queue-fit study. Rates per hour.
struct QueueFitSetup {
    std::vector<double> lambdas = {32.0, 40.0, 48.0, 56.0, 64.0};  // one segment each
    std::size_t n_slots = 9;
    double theta = 30.0;
    double q = 0.7;
    double mu_sr = 60.0 / 12.3;
    double mu_sab = 60.0 / 5.6;
    double segment_hours = 2000.0;
    double warmup = 2.0;
    double sweep_lambda = 56.0;
    std::vector<double> sweep_sab_los_min = {0.0, 0.7, 1.4, 2.1, 2.8, 3.5, 4.2, 4.9, 5.6};
};

/// Parameters shared by every runner. Seeds for replication r of grid point
/// g are derive_seed(seed, {g, r, stream}); results do not depend on the
/// thread count.
struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::Accuracy;
    // Scenario: 0 takes the count from the config file.
    std::size_t replications = 50;
    std::size_t sample_size = 2000;
    std::vector<ParamSet> grid;
    std::uint64_t seed = 1;
    std::filesystem::path output_dir;  // empty: keep results in memory only
    std::size_t threads = 0;           // 0: hardware concurrency
    std::size_t restarts = 1;          // random EM starts averaged per fit
    std::size_t partitions = 10;       // robustness
    std::optional<double> p_ss;        // short-service masking; empty: 1 - q
    std::filesystem::path input_path;  // robustness (required), sensitivity (optional)
    double hours_per_unit = 1.0;       // unit of the u column in input_path
    std::filesystem::path config_path;  // scenario
    double classifier_sensitivity = 0.85;
    double classifier_specificity = 0.76;
    QueueFitSetup queuefit;

    void check() const;
    static ExperimentSpec defaults(ExperimentKind kind);
};

// Method identifiers used in every artifact.
inline constexpr std::string_view kEm = "em";
inline constexpr std::string_view kM1Service = "m1-service";
inline constexpr std::string_view kM1Kab = "m1-kab";
inline constexpr std::string_view kM2Service = "m2-service";
inline constexpr std::string_view kM2Sab = "m2-sab";
inline constexpr std::string_view kM2Classifier = "m2-classifier";

struct Failure {
    std::size_t grid = 0;
    std::size_t replication = 0;
    std::string method;
    std::string message;
};

struct Estimate {
    std::size_t grid = 0;
    std::size_t replication = 0;
    std::string method;
    ParamSet params{};
    std::size_t iterations = 0;
    bool converged = true;
};

struct MethodSummary {
    std::string method;
    std::size_t n_ok = 0;
    ParamSet mean{};
    // Against the generating parameters; NaN where the truth is not a model
    // input (gamma in queue simulations).
    double mse_theta = 0.0;
    double mse_q = 0.0;
    double mse_gamma = 0.0;
};

const MethodSummary& find_method(std::span<const MethodSummary> methods, std::string_view id);

struct AccuracyCell {
    ParamSet truth{};
    double sab_fraction = 0.0;  // (1 - q) theta / (theta + gamma)
    std::vector<MethodSummary> methods;
};

struct AccuracyResult {
    std::vector<AccuracyCell> cells;
    std::vector<Estimate> estimates;
    std::vector<Failure> failures;
};

struct SensitivityResult {
    ParamSet truth{};
    std::vector<Estimate> estimates;  // method = initialization variant
    std::vector<MethodSummary> variants;
    // Largest (max - min) across variants on one dataset.
    double max_spread_theta = 0.0;
    double max_spread_q = 0.0;
    double max_spread_gamma = 0.0;
    std::vector<Failure> failures;
};

struct SubsampleFit {
    std::size_t size = 0;
    ParamSet params{};
};

struct RobustnessResult {
    ParamSet reference{};
    std::vector<SubsampleFit> subsamples;
    std::vector<Failure> failures;
};

struct QueueModel {
    std::string id;
    double theta = 0.0;
    double q = 1.0;
    double mu_sr = 0.0;
    double mu_sab = SimConfig::kInstantaneous;
};

struct SweepPoint {
    double sab_los_min = 0.0;
    PerfMeasures measures;
};

struct QueueFitResult {
    std::vector<PerfMeasures> reference;  // one per segment
    std::vector<QueueModel> models;
    std::map<std::string, std::vector<PerfMeasures>> candidates;
    std::vector<RmseRow> rmse;
    std::vector<SweepPoint> sweep;

    double rmse_of(std::string_view model, Measure m) const;
};

struct ScenarioResult {
    ScenarioConfig config;
    std::vector<PerfMeasures> measures;  // one per replication
    std::vector<Estimate> estimates;
    std::vector<MethodSummary> methods;
    std::vector<Failure> failures;
};

inline double mean_patience_minutes(double theta) { return 60.0 / theta; }

/// Simulated classifier for uncertain records: a silent abandonment is
/// flagged with probability `sensitivity`, a served record is cleared with
/// probability `specificity`. The verdict is attached as pi in {0, 1}.
/// `truth` and `masked` are index-aligned.
std::vector<Observation> attach_classifier_scores(std::span<const LabeledObservation> truth,
                                                  std::span<const Observation> masked,
                                                  double sensitivity, double specificity,
                                                  std::uint64_t seed);

AccuracyResult run_accuracy(const ExperimentSpec& spec);
SensitivityResult run_sensitivity(const ExperimentSpec& spec);
RobustnessResult run_robustness(const ExperimentSpec& spec);
QueueFitResult run_queuefit(const ExperimentSpec& spec);
ScenarioResult run_scenario(const ExperimentSpec& spec);

}  // namespace sabkit
