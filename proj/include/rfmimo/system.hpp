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

#include "rfmimo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace rfmimo {

enum class DitherMode { none, uniform_binary, gaussian };

inline std::string to_string(DitherMode m)
{
    switch (m) {
    case DitherMode::none: return "none";
    case DitherMode::uniform_binary: return "uniform_binary";
    case DitherMode::gaussian: return "gaussian";
    }
    return "none";
}

inline DitherMode parse_dither_mode(const std::string& s)
{
    if (s == "none") return DitherMode::none;
    if (s == "uniform_binary" || s == "binary") return DitherMode::uniform_binary;
    if (s == "gaussian") return DitherMode::gaussian;
    throw InvalidArgument("unknown dither mode '" + s + "'");
}

/// Nonsubtractive dither added ahead of the quantizer; `power` is D_0 in the
/// same units as the noise power N_0.
struct DitherSpec {
    DitherMode mode = DitherMode::none;
    double power = 0.0;

    void validate() const
    {
        require(power >= 0.0 && std::isfinite(power), "dither power must be finite and >= 0");
        require(mode != DitherMode::none || power == 0.0, "dither mode 'none' requires D_0 = 0");
    }
};

/// Single-OFDM-symbol layout: N samples per symbol (no CP) and the occupied
/// DFT bins, kept sorted and unique.
struct OfdmLayout {
    int samples = 4096;
    std::vector<int> occupied{0, 1, 2, 3, 4, 4092, 4093, 4094, 4095};

    int subcarrier_count() const { return static_cast<int>(occupied.size()); }

    void validate() const
    {
        require(samples >= 1, "N must be >= 1");
        require(!occupied.empty(), "occupied subcarrier set must be nonempty");
        for (int k : occupied)
            require(k >= 0 && k < samples, "occupied subcarrier " + std::to_string(k) + " outside [0, N)");
        std::vector<int> sorted = occupied;
        std::sort(sorted.begin(), sorted.end());
        require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
                "occupied subcarrier set has duplicates");
        require(sorted == occupied, "occupied subcarrier set must be sorted");
    }

    static OfdmLayout make(int samples, std::vector<int> occupied)
    {
        std::sort(occupied.begin(), occupied.end());
        OfdmLayout layout{samples, std::move(occupied)};
        layout.validate();
        return layout;
    }

    /// Symmetric set of 2*half+1 bins around DC: {N-half..N-1, 0..half}.
    static OfdmLayout symmetric(int samples, int half)
    {
        std::vector<int> occ;
        for (int k = -half; k <= half; ++k) occ.push_back((k + samples) % samples);
        return make(samples, std::move(occ));
    }
};

/// Carrier and ADC sampling rate. First-Nyquist-zone sampling is assumed.
struct RfParams {
    double carrier_hz = 2.4e9;
    double sample_rate_hz = 10e9;

    double normalized_carrier() const { return carrier_hz / sample_rate_hz; }

    void validate() const
    {
        require(sample_rate_hz > 0.0 && std::isfinite(sample_rate_hz), "f_s must be positive");
        require(carrier_hz > 0.0 && carrier_hz < sample_rate_hz / 2.0, "f_c must lie in (0, f_s/2)");
    }
};

/// Everything the analytical engine needs besides the channel.
struct SignalModel {
    OfdmLayout layout;
    RfParams rf;
    double symbol_energy = 1.0; // E_s
    double noise_power = 0.1;   // N_0
    DitherSpec dither;

    /// Effective white power at the quantizer input beyond the signal, N_0 + D_0.
    double effective_noise() const { return noise_power + dither.power; }

    void validate() const
    {
        layout.validate();
        rf.validate();
        require(symbol_energy > 0.0 && std::isfinite(symbol_energy), "E_s must be positive");
        require(noise_power >= 0.0 && std::isfinite(noise_power), "N_0 must be >= 0");
        dither.validate();
    }

    double bandwidth_hz() const
    {
        return static_cast<double>(layout.subcarrier_count()) / layout.samples * rf.sample_rate_hz;
    }
    double oversampling_rate() const
    {
        return static_cast<double>(layout.samples) / layout.subcarrier_count();
    }
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

} // namespace rfmimo
