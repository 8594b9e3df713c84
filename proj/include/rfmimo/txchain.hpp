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

#include "rfmimo/channel.hpp"
#include "rfmimo/numerics.hpp"
#include "rfmimo/system.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace rfmimo {

// ---------------------------------------------------------------------------
// QAM
// ---------------------------------------------------------------------------

/// Square Gray-labeled QAM scaled to average energy E_s.
///
/// A label's upper half of bits selects the in-phase level, the lower half
/// the quadrature level; each half is Gray decoded so horizontally or
/// vertically adjacent points differ in exactly one bit.
class QamConstellation {
public:
    QamConstellation(int order, double symbol_energy) : order_(order), energy_(symbol_energy)
    {
        require(order == 4 || order == 16 || order == 64 || order == 256,
                "QAM order must be one of 4, 16, 64, 256 (got " + std::to_string(order) + ")");
        require(symbol_energy > 0.0 && std::isfinite(symbol_energy), "QAM symbol energy must be positive");
        side_ = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
        bits_per_axis_ = std::countr_zero(static_cast<unsigned>(side_));
        // mean of (2i - (m-1))^2 over both axes is 2 (m^2 - 1) / 3
        const double raw_energy = 2.0 * (side_ * side_ - 1) / 3.0;
        scale_ = std::sqrt(symbol_energy / raw_energy);
        points_.reserve(static_cast<std::size_t>(order));
        for (int label = 0; label < order; ++label) points_.push_back(compute_point(label));
    }

    int order() const { return order_; }
    int side() const { return side_; }
    double symbol_energy() const { return energy_; }
    double scale() const { return scale_; }
    const std::vector<cplx>& points() const { return points_; }
    cplx point(int label) const { return points_.at(static_cast<std::size_t>(label)); }

    /// Label of the constellation point nearest to `v`.
    int nearest_label(cplx v) const
    {
        const auto level = [&](double x) {
            const double idx = std::round((x / scale_ + (side_ - 1)) / 2.0);
            return static_cast<int>(std::clamp(idx, 0.0, static_cast<double>(side_ - 1)));
        };
        const int li = level(v.real());
        const int lq = level(v.imag());
        return (binary_to_gray(li) << bits_per_axis_) | binary_to_gray(lq);
    }

private:
    static int gray_to_binary(int g)
    {
        int b = 0;
        for (; g; g >>= 1) b ^= g;
        return b;
    }
    static int binary_to_gray(int b) { return b ^ (b >> 1); }

    cplx compute_point(int label) const
    {
        const int mask = side_ - 1;
        const int li = gray_to_binary((label >> bits_per_axis_) & mask);
        const int lq = gray_to_binary(label & mask);
        return {scale_ * (2 * li - (side_ - 1)), scale_ * (2 * lq - (side_ - 1))};
    }

    int order_;
    double energy_;
    int side_ = 0;
    int bits_per_axis_ = 0;
    double scale_ = 1.0;
    std::vector<cplx> points_;
};

/// Frequency-domain symbols of one OFDM symbol: column i holds the U-vector
/// s^_k for k = occupied[i]. Unoccupied bins are implicitly zero.
struct FrequencySymbols {
    std::vector<int> occupied;
    ComplexGrid values; // U x S
    std::vector<int> labels; // column-major U x S, empty when not drawn from QAM
    int qam_order = 0;
    double symbol_energy = 0.0;

    int users() const { return static_cast<int>(values.rows()); }
    int subcarrier_count() const { return static_cast<int>(occupied.size()); }
    auto column(int i) const { return values.col(i); }
};

inline FrequencySymbols map_qam(RandomStream& rng, int order, double symbol_energy, int users,
                                std::span<const int> occupied)
{
    require(users >= 1, "map_qam: U must be >= 1");
    const QamConstellation qam(order, symbol_energy);
    FrequencySymbols out;
    out.occupied.assign(occupied.begin(), occupied.end());
    out.values.resize(users, static_cast<Eigen::Index>(occupied.size()));
    out.labels.resize(static_cast<std::size_t>(users) * occupied.size());
    out.qam_order = order;
    out.symbol_energy = symbol_energy;
    for (Eigen::Index i = 0; i < out.values.cols(); ++i)
        for (int u = 0; u < users; ++u) {
            const int label = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(order)));
            out.labels[static_cast<std::size_t>(i * users + u)] = label;
            out.values(u, i) = qam.point(label);
        }
    return out;
}

/// Circularly-symmetric complex Gaussian symbols CN(0, E_s) on the occupied
/// bins. Makes the quantizer input exactly Gaussian, which the statistical
/// oracles rely on.
inline FrequencySymbols gaussian_symbols(RandomStream& rng, double symbol_energy, int users,
                                         std::span<const int> occupied)
{
    require(users >= 1, "gaussian_symbols: U must be >= 1");
    require(symbol_energy > 0.0, "gaussian_symbols: E_s must be positive");
    FrequencySymbols out;
    out.occupied.assign(occupied.begin(), occupied.end());
    out.values.resize(users, static_cast<Eigen::Index>(occupied.size()));
    out.symbol_energy = symbol_energy;
    for (Eigen::Index i = 0; i < out.values.cols(); ++i)
        for (int u = 0; u < users; ++u) out.values(u, i) = rng.complex_gaussian(symbol_energy);
    return out;
}

// ---------------------------------------------------------------------------
// Frames
// ---------------------------------------------------------------------------

using ComplexRows = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RealRows = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Complex envelope x^BB: row b is antenna b's length-N sequence.
struct BasebandFrame {
    ComplexRows samples;

    int antennas() const { return static_cast<int>(samples.rows()); }
    int length() const { return static_cast<int>(samples.cols()); }
};

enum class FrameStage { analog, one_bit, infinite_resolution };

/// Real RF samples at the ADC (row b is antenna b), tagged by stage.
struct RfFrame {
    RealRows samples;
    FrameStage stage = FrameStage::analog;

    int antennas() const { return static_cast<int>(samples.rows()); }
    int length() const { return static_cast<int>(samples.cols()); }
};

/// s_n = (1/sqrt(N)) sum_{k in S} s^_k e^{j 2 pi k n / N}; returns U x N.
inline ComplexRows ofdm_modulate(const FrequencySymbols& symbols, int samples)
{
    require(samples >= 1, "ofdm_modulate: N must be >= 1");
    for (int k : symbols.occupied)
        require(k >= 0 && k < samples, "ofdm_modulate: occupied index " + std::to_string(k) + " outside [0, N)");
    const std::vector<cplx> roots = roots_of_unity(static_cast<std::size_t>(samples));
    const double norm = 1.0 / std::sqrt(static_cast<double>(samples));
    const int users = symbols.users();
    ComplexRows out = ComplexRows::Zero(users, samples);
    for (int i = 0; i < symbols.subcarrier_count(); ++i) {
        const auto k = static_cast<std::int64_t>(symbols.occupied[static_cast<std::size_t>(i)]);
        for (int u = 0; u < users; ++u) {
            const cplx s = symbols.values(u, i) * norm;
            for (std::int64_t n = 0; n < samples; ++n) out(u, n) += s * roots[static_cast<std::size_t>((k * n) % samples)];
        }
    }
    return out;
}

/// Received noiseless envelope of one CP-protected OFDM symbol, evaluated in
/// the frequency domain: x^_k = H^_k s^_k, then per-antenna OFDM modulation.
/// Equal to CP insertion, linear convolution with the taps and CP removal.
inline BasebandFrame apply_channel(const FrequencySymbols& symbols, const ChannelRealization& ch, int samples)
{
    require(ch.users() == symbols.users(), "apply_channel: channel has " + std::to_string(ch.users()) +
                                               " users, symbols have " + std::to_string(symbols.users()));
    require(samples >= ch.tap_count(), "apply_channel: need N >= L");
    FrequencySymbols received;
    received.occupied = symbols.occupied;
    received.values.resize(ch.antennas(), symbols.subcarrier_count());
    for (int i = 0; i < symbols.subcarrier_count(); ++i) {
        const int k = symbols.occupied[static_cast<std::size_t>(i)];
        require(k >= 0 && k < samples, "apply_channel: occupied index outside [0, N)");
        if (ch.has_response(k) && ch.response_samples() == samples)
            received.values.col(i) = ch.response(k) * symbols.values.col(i);
        else
            received.values.col(i) = freq_response(ch.taps(), k, samples) * symbols.values.col(i);
    }
    return BasebandFrame{ofdm_modulate(received, samples)};
}

/// x^RF_n = sqrt(2) Re{x^BB_n e^{j 2 pi (f_c/f_s) n}}, n = 0 at the first
/// post-CP sample.
inline RfFrame upconvert(const BasebandFrame& bb, const RfParams& rf)
{
    rf.validate();
    const int n_samples = bb.length();
    const double fc = rf.normalized_carrier();
    std::vector<cplx> carrier(static_cast<std::size_t>(n_samples));
    for (int n = 0; n < n_samples; ++n) carrier[static_cast<std::size_t>(n)] = unit_phase(fc * n);
    RfFrame out{RealRows(bb.antennas(), n_samples), FrameStage::analog};
    const double root2 = std::sqrt(2.0);
    for (int b = 0; b < bb.antennas(); ++b)
        for (int n = 0; n < n_samples; ++n)
            out.samples(b, n) = root2 * (bb.samples(b, n) * carrier[static_cast<std::size_t>(n)]).real();
    return out;
}

/// y = x + w + d with w ~ N(0, N_0/2) per entry and d per `dither`.
/// Noise is drawn from `noise_rng`, dither from `dither_rng`.
inline RfFrame add_noise_and_dither(const RfFrame& rf, double noise_power, const DitherSpec& dither,
                                    RandomStream& noise_rng, RandomStream& dither_rng)
{
    require(noise_power >= 0.0 && std::isfinite(noise_power), "add_noise_and_dither: N_0 must be >= 0");
    dither.validate();
    RfFrame out = rf;
    if (noise_power > 0.0) {
        const double sd = std::sqrt(noise_power / 2.0);
        for (Eigen::Index b = 0; b < out.samples.rows(); ++b)
            for (Eigen::Index n = 0; n < out.samples.cols(); ++n) out.samples(b, n) += sd * noise_rng.gaussian();
    }
    if (dither.mode != DitherMode::none && dither.power > 0.0) {
        const double amp = std::sqrt(dither.power / 2.0);
        for (Eigen::Index b = 0; b < out.samples.rows(); ++b)
            for (Eigen::Index n = 0; n < out.samples.cols(); ++n) {
                if (dither.mode == DitherMode::uniform_binary)
                    out.samples(b, n) += dither_rng.coin() ? amp : -amp;
                else
                    out.samples(b, n) += amp * dither_rng.gaussian();
            }
    }
    return out;
}

/// Single-stream variant: noise first, then dither, from the same stream.
inline RfFrame add_noise_and_dither(const RfFrame& rf, double noise_power, const DitherSpec& dither,
                                    RandomStream& rng)
{
    return add_noise_and_dither(rf, noise_power, dither, rng, rng);
}

} // namespace rfmimo
