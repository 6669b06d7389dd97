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

#include "sabkit/domain.hpp"

#include <cmath>
#include <string>

#include "sabkit/error.hpp"
#include "sabkit/random.hpp"

namespace sabkit {

std::string_view to_string(CompleteClass c) {
    switch (c) {
        case CompleteClass::Service: return "C1_Service";
        case CompleteClass::KnownAbandonment: return "C2_KnownAbandonment";
        case CompleteClass::SilentAbandonment: return "C3_SilentAbandonment";
    }
    return "?";
}

std::string_view to_string(MissingClass m) {
    switch (m) {
        case MissingClass::Uncertain: return "M0_Uncertain";
        case MissingClass::Service: return "M1_Service";
        case MissingClass::KnownAbandonment: return "M2_KnownAbandonment";
    }
    return "?";
}

Observation Observation::make(double u, bool y, Delta delta, std::optional<double> pi) {
    if (!std::isfinite(u) || u <= 0.0)
        throw InvalidArgument("observed time must be positive and finite, got " +
                              std::to_string(u));
    if (y && delta != Delta::One)
        throw InvalidArgument("an indicated abandonment (y=1) requires delta=1");
    if (pi.has_value()) {
        if (delta != Delta::Missing)
            throw InvalidArgument("pi is only allowed on records with missing delta");
        if (!(*pi >= 0.0 && *pi <= 1.0))
            throw InvalidArgument("pi must lie in [0, 1]");
    }
    return Observation(u, y, delta, pi);
}

std::optional<MissingClass> Observation::missing_class() const noexcept {
    switch (delta_) {
        case Delta::Zero: return MissingClass::Service;
        case Delta::Missing: return MissingClass::Uncertain;
        case Delta::One: break;
    }
    if (y_) return MissingClass::KnownAbandonment;
    return std::nullopt;
}

Observation Observation::rescaled(double factor) const {
    return make(u_ * factor, y_, delta_, pi_);
}

bool ParamSet::valid() const noexcept {
    return std::isfinite(theta) && std::isfinite(gamma) && theta > 0.0 && gamma > 0.0 &&
           q >= 0.0 && q <= 1.0;
}

void ParamSet::check() const {
    if (!valid())
        throw InvalidArgument("invalid parameters: need theta > 0, gamma > 0, 0 <= q <= 1");
}

bool ParamSet::at_boundary() const noexcept {
    return q == 0.0 || q == 1.0 || theta == 0.0 || gamma == 0.0;
}

bool ClassWeights::normalized() const noexcept {
    const bool in_range = c1 >= 0.0 && c1 <= 1.0 && c2 >= 0.0 && c2 <= 1.0 && c3 >= 0.0 &&
                          c3 <= 1.0;
    return in_range && std::abs(c1 + c2 + c3 - 1.0) <= kSumTolerance;
}

ClassWeights ClassWeights::indicator(CompleteClass c) noexcept {
    switch (c) {
        case CompleteClass::Service: return {1.0, 0.0, 0.0};
        case CompleteClass::KnownAbandonment: return {0.0, 1.0, 0.0};
        case CompleteClass::SilentAbandonment: return {0.0, 0.0, 1.0};
    }
    return {};
}

CompleteClass classify_complete(int delta, int y) {
    if ((delta != 0 && delta != 1) || (y != 0 && y != 1))
        throw InvalidArgument("delta and y must be 0 or 1");
    if (delta == 0) {
        if (y == 1) throw InvalidArgument("y=1 with delta=0 is not a valid class");
        return CompleteClass::Service;
    }
    return y == 1 ? CompleteClass::KnownAbandonment : CompleteClass::SilentAbandonment;
}

CompleteClass classify_complete(const Observation& obs) {
    if (obs.delta() == Delta::Missing)
        throw InvalidArgument("record has missing delta; complete class is unknown");
    return classify_complete(obs.delta() == Delta::One ? 1 : 0, obs.y() ? 1 : 0);
}

std::vector<Observation> mask(std::span<const LabeledObservation> records, double p_ss,
                              std::uint64_t seed) {
    if (!(p_ss >= 0.0 && p_ss <= 1.0)) throw InvalidArgument("p_ss must lie in [0, 1]");
    Rng rng(seed);
    std::vector<Observation> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        if (r.obs.delta() == Delta::Missing)
            throw InvalidArgument("mask expects records with complete delta");
        if (classify_complete(r.obs) != r.cls)
            throw InvalidArgument("record label disagrees with its (delta, y)");
        // One draw per record regardless of class keeps the stream aligned
        // with input order.
        const bool short_service = rng.bernoulli(p_ss);
        switch (r.cls) {
            case CompleteClass::KnownAbandonment:
                out.push_back(r.obs);
                break;
            case CompleteClass::SilentAbandonment:
                out.push_back(Observation::make(r.obs.u(), false, Delta::Missing));
                break;
            case CompleteClass::Service:
                out.push_back(short_service ? Observation::make(r.obs.u(), false, Delta::Missing)
                                            : r.obs);
                break;
        }
    }
    return out;
}

ScopeReport scope_report(double p_kab, double p_m0, double pi_bar) {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(p_kab) || !in_unit(p_m0) || !in_unit(pi_bar))
        throw InvalidArgument("scope inputs must lie in [0, 1]");
    if (p_kab + p_m0 > 1.0 + 1e-12)
        throw InvalidArgument("known-abandonment and uncertain proportions exceed 1");
    const double sab = p_m0 * pi_bar;
    const double total = p_kab + sab;
    if (total <= 0.0)
        throw InvalidArgument("no abandonment: silent share is undefined");
    return {total, sab / total};
}

}  // namespace sabkit
