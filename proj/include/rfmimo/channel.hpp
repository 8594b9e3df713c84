// SPDX-License-Identifier: Apache-2.0
//
// rfmimo - 1-bit direct RF-sampling massive MU-MIMO-OFDM uplink simulator
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "rfmimo/numerics.hpp"

#include <map>
#include <span>
#include <vector>

namespace rfmimo {

/// Tapped-delay-line MIMO channel H_0..H_{L-1} (each B x U) together with
/// cached per-subcarrier responses.
class ChannelRealization {
public:
    ChannelRealization() = default;

    explicit ChannelRealization(std::vector<ComplexGrid> taps) : taps_(std::move(taps))
    {
        require(!taps_.empty(), "channel needs at least one tap");
        const auto rows = taps_.front().rows();
        const auto cols = taps_.front().cols();
        require(rows >= 1 && cols >= 1, "channel taps must be nonempty");
        for (const auto& t : taps_)
            require(t.rows() == rows && t.cols() == cols, "channel taps must share dimensions");
    }

    int antennas() const { return taps_.empty() ? 0 : static_cast<int>(taps_.front().rows()); }
    int users() const { return taps_.empty() ? 0 : static_cast<int>(taps_.front().cols()); }
    int tap_count() const { return static_cast<int>(taps_.size()); }
    const std::vector<ComplexGrid>& taps() const { return taps_; }

    /// Evaluates and caches H^_k for every k in `subcarriers`.
    void cache_responses(std::span<const int> subcarriers, int samples);

    bool has_response(int k) const { return responses_.contains(k); }

    /// Cached H^_k; throws if it was never cached.
    const ComplexGrid& response(int k) const
    {
        const auto it = responses_.find(k);
        if (it == responses_.end())
            throw InvalidArgument("no cached frequency response for subcarrier " + std::to_string(k));
        return it->second;
    }

    int response_samples() const { return response_samples_; }
    const std::map<int, ComplexGrid>& responses() const { return responses_; }

private:
    std::vector<ComplexGrid> taps_;
    std::map<int, ComplexGrid> responses_;
    int response_samples_ = 0;
};

/// H^_k = sum_l H_l e^{-j 2 pi k l / N}.
inline ComplexGrid freq_response(std::span<const ComplexGrid> taps, int k, int samples)
{
    require(samples >= 1, "freq_response: N must be >= 1");
    require(k >= 0 && k < samples, "freq_response: subcarrier " + std::to_string(k) + " outside [0, N)");
    require(!taps.empty(), "freq_response: no taps");
    ComplexGrid h = ComplexGrid::Zero(taps.front().rows(), taps.front().cols());
    for (std::size_t l = 0; l < taps.size(); ++l)
        h += taps[l] * std::conj(unit_root(static_cast<std::int64_t>(k) * static_cast<std::int64_t>(l), samples));
    return h;
}

inline void ChannelRealization::cache_responses(std::span<const int> subcarriers, int samples)
{
    if (response_samples_ != samples) {
        responses_.clear();
        response_samples_ = samples;
    }
    for (int k : subcarriers)
        if (!responses_.contains(k)) responses_.emplace(k, freq_response(taps_, k, samples));
}

/// i.i.d. Rayleigh taps with a uniform power delay profile: every entry of
/// every tap is CN(0, 1/L), so each antenna/user pair has unit total power.
inline ChannelRealization draw_channel(int antennas, int users, int taps, RandomStream& rng)
{
    require(antennas >= 1 && users >= 1 && taps >= 1, "draw_channel: dimensions must be positive");
    require(antennas >= users, "draw_channel: need B >= U");
    const double variance = 1.0 / taps;
    std::vector<ComplexGrid> h;
    h.reserve(static_cast<std::size_t>(taps));
    for (int l = 0; l < taps; ++l) {
        ComplexGrid tap(antennas, users);
        for (int u = 0; u < users; ++u)
            for (int b = 0; b < antennas; ++b) tap(b, u) = rng.complex_gaussian(variance);
        h.push_back(std::move(tap));
    }
    return ChannelRealization(std::move(h));
}

} // namespace rfmimo
