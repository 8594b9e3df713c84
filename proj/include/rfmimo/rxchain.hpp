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
#include "rfmimo/txchain.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace rfmimo {

/// Per-occupied-subcarrier B-vectors after digital down-conversion;
/// column i belongs to occupied[i].
struct BasebandSubcarriers {
    std::vector<int> occupied;
    ComplexGrid values; // B x S
};

/// ZF outputs, column i belongs to occupied[i].
struct SymbolEstimates {
    std::vector<int> occupied;
    ComplexGrid values; // U x S
};

/// Diagonal real gain matrix, stored as its diagonal.
struct DiagonalGain {
    RealVector diag;

    static DiagonalGain identity(int n) { return {RealVector::Ones(n)}; }
    int size() const { return static_cast<int>(diag.size()); }
    RealGrid matrix() const { return diag.asDiagonal(); }
};

/// Ideal DDC: z^BB_k = sqrt(2/N) sum_n z^RF_n e^{-j 2 pi (k/N + f_c/f_s) n}
/// evaluated for every occupied k.
inline BasebandSubcarriers ddc(const RfFrame& z, const OfdmLayout& layout, const RfParams& rf)
{
    layout.validate();
    rf.validate();
    const int n_samples = layout.samples;
    require(z.length() == n_samples, "ddc: frame has " + std::to_string(z.length()) + " samples, expected N = " +
                                         std::to_string(n_samples));
    const std::size_t N = static_cast<std::size_t>(n_samples);
    const std::vector<cplx> roots = roots_of_unity(N, -1);
    const double fc = rf.normalized_carrier();

    std::vector<cplx> carrier(N);
    for (std::size_t n = 0; n < N; ++n) carrier[n] = std::conj(unit_phase(fc * static_cast<double>(n)));

    const int S = layout.subcarrier_count();
    std::vector<double> kernel_re(N), kernel_im(N);
    BasebandSubcarriers out{layout.occupied, ComplexGrid(z.antennas(), S)};
    const double norm = std::sqrt(2.0 / n_samples);
    for (int i = 0; i < S; ++i) {
        const auto k = static_cast<std::size_t>(layout.occupied[static_cast<std::size_t>(i)]);
        for (std::size_t n = 0; n < N; ++n) {
            const cplx w = roots[(k * n) % N] * carrier[n];
            kernel_re[n] = w.real();
            kernel_im[n] = w.imag();
        }
        for (int b = 0; b < z.antennas(); ++b) {
            const double* row = z.samples.row(b).data();
            double re = 0.0, im = 0.0;
            for (std::size_t n = 0; n < N; ++n) {
                re += row[n] * kernel_re[n];
                im += row[n] * kernel_im[n];
            }
            out.values(b, i) = norm * cplx(re, im);
        }
    }
    return out;
}

/// ZF combiner A^_k = (G H^_k)^dagger for one subcarrier.
inline ComplexGrid zf_matrix(const ComplexGrid& response, const DiagonalGain& gain, int k)
{
    require(gain.size() == response.rows(), "zf: gain size does not match antenna count");
    for (Eigen::Index b = 0; b < gain.diag.size(); ++b)
        require(gain.diag[b] > 0.0, "zf: gain entries must be positive");
    return pseudo_inverse(gain.diag.asDiagonal() * response, "subcarrier " + std::to_string(k));
}

/// s^est_k = (G H^_k)^dagger z^BB_k with perfect CSI.
inline SymbolEstimates zf_combine(const BasebandSubcarriers& zbb, const ChannelRealization& ch,
                                  const DiagonalGain& gain)
{
    require(zbb.values.rows() == ch.antennas(), "zf_combine: antenna count mismatch");
    SymbolEstimates out{zbb.occupied, ComplexGrid(ch.users(), static_cast<Eigen::Index>(zbb.occupied.size()))};
    for (std::size_t i = 0; i < zbb.occupied.size(); ++i) {
        const int k = zbb.occupied[i];
        const auto idx = static_cast<Eigen::Index>(i);
        out.values.col(idx) = zf_matrix(ch.response(k), gain, k) * zbb.values.col(idx);
    }
    return out;
}

// ---------------------------------------------------------------------------
// EVM
// ---------------------------------------------------------------------------

/// Sums of ||s^est - s||^2 and ||s||^2. Merging is plain addition, so
/// reductions in a fixed order are bit-reproducible.
struct EvmAccumulator {
    double error_energy = 0.0;
    double symbol_energy = 0.0;
    std::size_t frames = 0;

    void add(const SymbolEstimates& est, const FrequencySymbols& truth)
    {
        require(est.values.rows() == truth.values.rows() && est.values.cols() == truth.values.cols(),
                "evm: estimate and truth dimensions differ");
        require(est.occupied == truth.occupied, "evm: estimate and truth subcarrier sets differ");
        error_energy += (est.values - truth.values).squaredNorm();
        symbol_energy += truth.values.squaredNorm();
        ++frames;
    }

    void merge(const EvmAccumulator& other)
    {
        error_energy += other.error_energy;
        symbol_energy += other.symbol_energy;
        frames += other.frames;
    }

    double ratio() const
    {
        require(frames > 0 && symbol_energy > 0.0, "evm: no symbols accumulated");
        return error_energy / symbol_energy;
    }

    double percent() const { return 100.0 * std::sqrt(ratio()); }
};

/// Pooled EVM in percent over matched estimate/truth collections.
inline double empirical_evm(std::span<const SymbolEstimates> estimates, std::span<const FrequencySymbols> truths)
{
    require(!estimates.empty(), "empirical_evm: empty collection");
    require(estimates.size() == truths.size(), "empirical_evm: collections have different sizes");
    EvmAccumulator acc;
    for (std::size_t i = 0; i < estimates.size(); ++i) acc.add(estimates[i], truths[i]);
    return acc.percent();
}

// ---------------------------------------------------------------------------
// PSD
// ---------------------------------------------------------------------------

/// One-sided power spectral density on a uniform grid over [0, f_s/2].
/// `density` is linear (power per Hz); integrating it over the grid gives
/// the mean-square value of the process.
struct PsdEstimate {
    std::vector<double> freq_hz;
    std::vector<double> density;
    bool antenna_averaged = true;

    double bin_width() const { return freq_hz.size() > 1 ? freq_hz[1] - freq_hz[0] : 0.0; }

    double integrated_power() const
    {
        double total = 0.0;
        for (double d : density) total += d;
        return total * bin_width();
    }

    std::size_t peak_index() const
    {
        return static_cast<std::size_t>(std::max_element(density.begin(), density.end()) - density.begin());
    }

    /// 10 log10(density / reference).
    std::vector<double> db(double reference = 1.0) const
    {
        std::vector<double> out(density.size());
        for (std::size_t i = 0; i < density.size(); ++i)
            out[i] = 10.0 * std::log10(std::max(density[i], 1e-300) / reference);
        return out;
    }

    std::vector<double> db_relative_to_peak() const { return db(density[peak_index()]); }

    /// Mean linear density over [lo, hi] Hz.
    double band_mean(double lo_hz, double hi_hz) const
    {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < freq_hz.size(); ++i)
            if (freq_hz[i] >= lo_hz && freq_hz[i] <= hi_hz) {
                sum += density[i];
                ++n;
            }
        require(n > 0, "band_mean: no PSD bins inside the band");
        return sum / static_cast<double>(n);
    }
};

/// Periodic Hann window of length n.
inline std::vector<double> hann_window(std::size_t n)
{
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n)));
    return w;
}

/// Welch averaged periodogram (Hann window, 50% overlap) accumulated over any
/// number of real sequences. Merge order fixes the floating-point result.
class WelchAccumulator {
public:
    WelchAccumulator(std::size_t segment_len, double sample_rate_hz)
        : segment_len_(segment_len), sample_rate_(sample_rate_hz), window_(hann_window(segment_len)),
          power_(segment_len / 2 + 1, 0.0)
    {
        require(segment_len >= 2 && std::has_single_bit(segment_len), "welch: segment length must be a power of two");
        require(sample_rate_hz > 0.0, "welch: sample rate must be positive");
        for (double w : window_) window_energy_ += w * w;
    }

    void add_sequence(std::span<const double> x)
    {
        require(x.size() >= segment_len_, "welch: segment length " + std::to_string(segment_len_) +
                                              " exceeds sequence length " + std::to_string(x.size()));
        const std::size_t hop = segment_len_ / 2;
        std::vector<cplx> buf(segment_len_);
        for (std::size_t start = 0; start + segment_len_ <= x.size(); start += hop) {
            for (std::size_t i = 0; i < segment_len_; ++i) buf[i] = {x[start + i] * window_[i], 0.0};
            detail::fft_radix2_inplace(buf, -1);
            for (std::size_t i = 0; i < power_.size(); ++i) power_[i] += std::norm(buf[i]);
            ++segments_;
        }
    }

    void add_frame(const RfFrame& frame)
    {
        for (int b = 0; b < frame.antennas(); ++b)
            add_sequence(std::span<const double>(frame.samples.row(b).data(), static_cast<std::size_t>(frame.length())));
    }

    void merge(const WelchAccumulator& other)
    {
        require(other.segment_len_ == segment_len_, "welch: cannot merge different segment lengths");
        for (std::size_t i = 0; i < power_.size(); ++i) power_[i] += other.power_[i];
        segments_ += other.segments_;
    }

    std::size_t segments() const { return segments_; }

    PsdEstimate estimate() const
    {
        require(segments_ > 0, "welch: no segments accumulated");
        PsdEstimate psd;
        const std::size_t bins = power_.size();
        psd.freq_hz.resize(bins);
        psd.density.resize(bins);
        const double scale = 1.0 / (static_cast<double>(segments_) * sample_rate_ * window_energy_);
        for (std::size_t i = 0; i < bins; ++i) {
            psd.freq_hz[i] = sample_rate_ * static_cast<double>(i) / static_cast<double>(segment_len_);
            const double one_sided = (i == 0 || i == bins - 1) ? 1.0 : 2.0;
            psd.density[i] = one_sided * power_[i] * scale;
        }
        return psd;
    }

private:
    std::size_t segment_len_;
    double sample_rate_;
    std::vector<double> window_;
    double window_energy_ = 0.0;
    std::vector<double> power_;
    std::size_t segments_ = 0;
};

/// Welch PSD averaged over all antennas of all frames.
inline PsdEstimate empirical_psd(std::span<const RfFrame> frames, std::size_t segment_len, double sample_rate_hz)
{
    require(!frames.empty(), "empirical_psd: no frames");
    WelchAccumulator acc(segment_len, sample_rate_hz);
    for (const RfFrame& f : frames) {
        require(segment_len <= static_cast<std::size_t>(f.length()), "empirical_psd: segment length exceeds N");
        acc.add_frame(f);
    }
    return acc.estimate();
}

// ---------------------------------------------------------------------------
// Constellation export
// ---------------------------------------------------------------------------

struct ConstellationPoint {
    int trial = 0;
    int symbol = 0;
    int subcarrier = 0;
    int user = 0;
    cplx value;
};

/// Estimates of one OFDM symbol with its (trial, symbol) coordinates.
struct TaggedEstimates {
    int trial = 0;
    int symbol = 0;
    SymbolEstimates estimates;
};

inline void append_constellation(std::vector<ConstellationPoint>& out, int trial, int symbol,
                                 const SymbolEstimates& est)
{
    for (std::size_t i = 0; i < est.occupied.size(); ++i)
        for (Eigen::Index u = 0; u < est.values.rows(); ++u)
            out.push_back({trial, symbol, est.occupied[i], static_cast<int>(u),
                           est.values(u, static_cast<Eigen::Index>(i))});
}

/// Flattened points ordered by (trial, symbol, subcarrier, user).
inline std::vector<ConstellationPoint> export_constellation(std::span<const TaggedEstimates> estimates)
{
    std::vector<ConstellationPoint> out;
    for (const auto& t : estimates) append_constellation(out, t.trial, t.symbol, t.estimates);
    std::stable_sort(out.begin(), out.end(), [](const ConstellationPoint& a, const ConstellationPoint& b) {
        if (a.trial != b.trial) return a.trial < b.trial;
        if (a.symbol != b.symbol) return a.symbol < b.symbol;
        if (a.subcarrier != b.subcarrier) return a.subcarrier < b.subcarrier;
        return a.user < b.user;
    });
    return out;
}

} // namespace rfmimo
