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

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace sabkit {

// Abandonment indicator of one conversation. Missing means the record cannot
// tell short service from silent abandonment.
enum class Delta : std::uint8_t { Zero = 0, One = 1, Missing = 2 };

// Classes when the abandonment indicator is known for every record.
enum class CompleteClass : std::uint8_t {
    Service = 1,            // delta = 0, y = 0, u = wait
    KnownAbandonment = 2,   // delta = 1, y = 1, u = patience
    SilentAbandonment = 3,  // delta = 1, y = 0, u = wait
};

// Classes visible when delta may be missing.
//   Service          => complete class Service
//   KnownAbandonment <=> complete class KnownAbandonment
//   Uncertain        => Service or SilentAbandonment
enum class MissingClass : std::uint8_t {
    Uncertain = 0,
    Service = 1,
    KnownAbandonment = 2,
};

std::string_view to_string(CompleteClass c);
std::string_view to_string(MissingClass m);

/// One conversation's censoring record. Durations are in hours.
///
/// Instances are only created through make(), which enforces:
///   u > 0 and finite; y = 1 implies delta = 1; delta missing implies y = 0;
///   pi is only present (and in [0, 1]) when delta is missing.
class Observation {
public:
    static Observation make(double u, bool y, Delta delta,
                            std::optional<double> pi = std::nullopt);

    double u() const noexcept { return u_; }
    bool y() const noexcept { return y_; }
    Delta delta() const noexcept { return delta_; }
    const std::optional<double>& pi() const noexcept { return pi_; }

    // Empty for a complete silent abandonment (delta = 1, y = 0), which only
    // exists in complete data.
    std::optional<MissingClass> missing_class() const noexcept;
    bool is_uncertain() const noexcept { return delta_ == Delta::Missing; }

    // Same record with u multiplied by factor (> 0).
    Observation rescaled(double factor) const;

    friend bool operator==(const Observation&, const Observation&) = default;

private:
    Observation(double u, bool y, Delta delta, std::optional<double> pi)
        : u_(u), y_(y), delta_(delta), pi_(pi) {}

    double u_;
    bool y_;
    Delta delta_;
    std::optional<double> pi_;
};

struct LabeledObservation {
    Observation obs;
    CompleteClass cls;

    friend bool operator==(const LabeledObservation&, const LabeledObservation&) = default;
};

// Patience rate theta, indication probability q, virtual-wait rate gamma.
// Rates are per hour.
struct ParamSet {
    double theta = 0.0;
    double q = 0.0;
    double gamma = 0.0;

    // theta > 0, gamma > 0, 0 <= q <= 1, all finite.
    bool valid() const noexcept;
    void check() const;
    // q at 0 or 1, or a rate at 0.
    bool at_boundary() const noexcept;

    friend bool operator==(const ParamSet&, const ParamSet&) = default;
};

// Posterior class probabilities of one record: service, known abandonment,
// silent abandonment.
struct ClassWeights {
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;

    static constexpr double kSumTolerance = 1e-12;
    bool normalized() const noexcept;

    static ClassWeights indicator(CompleteClass c) noexcept;
};

CompleteClass classify_complete(int delta, int y);
CompleteClass classify_complete(const Observation& obs);

// Short-service masking rate that reproduces the messaging composition of
// the uncertain class (45% short service, 55% silent abandonment).
inline constexpr double kMessagingShortServiceRate = 0.15;

/// Converts complete records into the observable missing-data view: every
/// silent abandonment loses its delta; each served record independently loses
/// its delta with probability p_ss; known abandonments are untouched.
std::vector<Observation> mask(std::span<const LabeledObservation> records, double p_ss,
                              std::uint64_t seed);

struct ScopeReport {
    double p_ab_total = 0.0;
    double sab_share = 0.0;
};

// Total abandonment and the silent share of it, from the known-abandonment
// proportion, the uncertain proportion and the mean silent-abandonment
// probability within the uncertain class.
ScopeReport scope_report(double p_kab, double p_m0, double pi_bar);

}  // namespace sabkit
