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

#include "rfmimo/bussgang.hpp"
#include "rfmimo/channel.hpp"
#include "rfmimo/harness/parallel.hpp"
#include "rfmimo/harness/report.hpp"
#include "rfmimo/quantizer.hpp"
#include "rfmimo/rxchain.hpp"
#include "rfmimo/txchain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

namespace rfmimo::validation {

using harness::ValidationCheck;

struct OracleOptions {
    std::uint64_t seed = 1;
    int threads = 1;
    std::ostream* log = nullptr;
};

namespace detail {

inline ValidationCheck make_check(std::string name, std::string metric, double value, double tolerance,
                                  std::string detail = {})
{
    return {std::move(name), value, tolerance, std::move(metric), value <= tolerance, std::move(detail)};
}

/// Small Gaussian-input system shared by the statistical oracles.
struct SmallSystem {
    SignalModel model;
    ChannelRealization channel;
};

inline SmallSystem small_system(std::uint64_t seed, std::uint64_t sub, int antennas, int users, int samples, int half,
                                int taps, double snr_db)
{
    SmallSystem s;
    s.model.layout = OfdmLayout::symmetric(samples, half);
    s.model.rf = {2.4e9, 10e9};
    s.model.symbol_energy = 1.0;
    s.model.noise_power = 1.0 / db_to_linear(snr_db);
    RandomStream rs = make_stream(seed, StreamPurpose::validation, 0, sub);
    s.channel = draw_channel(antennas, users, taps, rs);
    s.channel.cache_responses(s.model.layout.occupied, samples);
    return s;
}

/// Quantizer input y for one frame with Gaussian symbols.
inline RfFrame gaussian_frame(const SmallSystem& sys, std::uint64_t seed, std::uint64_t sub, std::uint64_t frame)
{
    RandomStream sym = make_stream(seed, StreamPurpose::validation, frame + 1, 2 * sub);
    RandomStream noise = make_stream(seed, StreamPurpose::validation, frame + 1, 2 * sub + 1);
    const FrequencySymbols s =
        gaussian_symbols(sym, sys.model.symbol_energy, sys.channel.users(), sys.model.layout.occupied);
    const RfFrame x = upconvert(apply_channel(s, sys.channel, sys.model.layout.samples), sys.model.rf);
    return add_noise_and_dither(x, sys.model.noise_power, {}, noise);
}

/// Splits `frames` into fixed chunks, runs `fn(first, last)` on each in
/// parallel and returns the per-chunk results in chunk order.
template <class Fn>
auto chunked(std::size_t frames, std::size_t chunk, int threads, Fn fn)
{
    const std::size_t count = (frames + chunk - 1) / chunk;
    return harness::parallel_map(count, threads, [&](std::size_t c) {
        return fn(c * chunk, std::min(frames, (c + 1) * chunk));
    });
}

} // namespace detail

/// Diagonal Bussgang gain against sum(z y) / sum(y^2) per antenna on the
/// reference system (B = 32, U = 4, N = 4096, nine subcarriers, L = 1000).
inline ValidationCheck bussgang_gain_check(const OracleOptions& opt, int frames = 160)
{
    const auto sys = detail::small_system(opt.seed, 1, 32, 4, 4096, 4, 1000, 10.0);
    const LagModel lm(sys.channel, sys.model);
    const int b_count = lm.antennas();
    struct Sums {
        std::vector<double> zy, yy;
    };
    const auto parts = detail::chunked(static_cast<std::size_t>(frames), 8, opt.threads, [&](std::size_t a, std::size_t e) {
        Sums s{std::vector<double>(b_count, 0.0), std::vector<double>(b_count, 0.0)};
        for (std::size_t f = a; f < e; ++f) {
            const RfFrame y = detail::gaussian_frame(sys, opt.seed, 1, f);
            for (int b = 0; b < b_count; ++b)
                for (int n = 0; n < y.length(); ++n) {
                    const double v = y.samples(b, n);
                    s.zy[b] += one_bit_sign(v) * v;
                    s.yy[b] += v * v;
                }
        }
        return s;
    });
    double mean_ratio = 0.0, worst = 0.0;
    for (int b = 0; b < b_count; ++b) {
        double zy = 0.0, yy = 0.0;
        for (const auto& p : parts) zy += p.zy[b], yy += p.yy[b];
        const double ratio = (zy / yy) / lm.gain().diag[b];
        mean_ratio += ratio / b_count;
        worst = std::max(worst, std::abs(ratio - 1.0));
    }
    return detail::make_check("bussgang_gain", "relative error of antenna-mean gain", std::abs(mean_ratio - 1.0), 0.02,
                              "worst antenna " + harness::detail::format("%.4f", worst));
}

/// (2/pi) asin(C[m]) against the empirical sign correlation for lags 0..8
/// on B = 2, U = 1, N = 64, three subcarriers.
inline ValidationCheck arcsine_check(const OracleOptions& opt, int frames = 20000)
{
    constexpr int kLags = 9;
    const auto sys = detail::small_system(opt.seed, 2, 2, 1, 64, 1, 4, 0.0);
    const LagModel lm(sys.channel, sys.model);
    const int n_samples = sys.model.layout.samples;
    using Acc = std::vector<double>; // [m][i][j]
    const auto parts = detail::chunked(static_cast<std::size_t>(frames), 1000, opt.threads, [&](std::size_t a, std::size_t e) {
        Acc acc(kLags * 4, 0.0);
        for (std::size_t f = a; f < e; ++f) {
            const RfFrame z = one_bit(detail::gaussian_frame(sys, opt.seed, 2, f));
            for (int m = 0; m < kLags; ++m)
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j) {
                        double s = 0.0;
                        for (int n = 0; n + m < n_samples; ++n) s += z.samples(i, n + m) * z.samples(j, n);
                        acc[(m * 2 + i) * 2 + j] += s / (n_samples - m);
                    }
        }
        return acc;
    });
    double err2 = 0.0, ref2 = 0.0;
    for (int m = 0; m < kLags; ++m) {
        const RealGrid rz = lm.rz(m);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                double emp = 0.0;
                for (const auto& p : parts) emp += p[(m * 2 + i) * 2 + j];
                emp /= frames;
                err2 += (emp - rz(i, j)) * (emp - rz(i, j));
                ref2 += rz(i, j) * rz(i, j);
            }
    }
    return detail::make_check("arcsine_law", "relative Frobenius error over lags 0..8", std::sqrt(err2 / ref2), 0.02);
}

/// Distortion covariance after down-conversion, C_e,k, against
/// E[e_k e_k^H] with e = DDC(z) - G DDC(y), on B = 2, U = 1, N = 64.
/// Returns the relative Frobenius error of the exact (triangular-window,
/// both-sided) lag sum and, as `detail`, that of the one-sided sum.
inline ValidationCheck distortion_check(const OracleOptions& opt, int frames = 100000)
{
    const auto sys = detail::small_system(opt.seed, 3, 2, 1, 64, 1, 4, 10.0);
    const LagModel lm(sys.channel, sys.model);
    const auto& layout = sys.model.layout;
    const std::size_t S = layout.occupied.size();
    const RealVector g = lm.gain().diag;
    const auto parts = detail::chunked(static_cast<std::size_t>(frames), 5000, opt.threads, [&](std::size_t a, std::size_t e) {
        std::vector<ComplexGrid> acc(S, ComplexGrid::Zero(2, 2));
        for (std::size_t f = a; f < e; ++f) {
            const RfFrame y = detail::gaussian_frame(sys, opt.seed, 3, f);
            const ComplexGrid zb = ddc(one_bit(y), layout, sys.model.rf).values;
            const ComplexGrid yb = ddc(y, layout, sys.model.rf).values;
            const ComplexGrid dist = zb - g.asDiagonal() * yb;
            for (std::size_t i = 0; i < S; ++i) {
                const auto c = dist.col(static_cast<Eigen::Index>(i));
                acc[i] += c * c.adjoint();
            }
        }
        return acc;
    });
    std::vector<ComplexGrid> emp(S, ComplexGrid::Zero(2, 2));
    for (const auto& p : parts)
        for (std::size_t i = 0; i < S; ++i) emp[i] += p[i];
    const auto rel_error = [&](DistortionLagSum mode) {
        const auto model = lm.distortion_covariances({mode, 0});
        double err2 = 0.0, ref2 = 0.0;
        for (std::size_t i = 0; i < S; ++i) {
            const ComplexGrid e = emp[i] / static_cast<double>(frames);
            err2 += (e - model[i].hermitian).squaredNorm();
            ref2 += model[i].hermitian.squaredNorm();
        }
        return std::sqrt(err2 / ref2);
    };
    const double exact = rel_error(DistortionLagSum::two_sided_windowed);
    const double one_sided = rel_error(DistortionLagSum::one_sided);
    return detail::make_check("distortion_covariance", "relative Frobenius error (two-sided windowed lag sum)", exact,
                              0.05, "one-sided lag sum error " + harness::detail::format("%.4f", one_sided));
}

/// Frequency-domain channel application against CP insertion, linear
/// convolution and CP removal (N = 64, L = 8).
inline ValidationCheck cyclic_prefix_check(const OracleOptions& opt)
{
    constexpr int N = 64, L = 8, B = 4, U = 2;
    RandomStream rs = make_stream(opt.seed, StreamPurpose::validation, 0, 4);
    const ChannelRealization ch = draw_channel(B, U, L, rs);
    std::vector<int> occ;
    for (int k = 0; k < N; k += 3) occ.push_back(k);
    const FrequencySymbols s = gaussian_symbols(rs, 1.0, U, occ);
    const ComplexRows tx = ofdm_modulate(s, N);
    const int cp = L - 1;
    ComplexRows ext(U, N + cp);
    ext.leftCols(cp) = tx.rightCols(cp);
    ext.rightCols(N) = tx;
    ComplexRows linear = ComplexRows::Zero(B, N + cp + L - 1);
    for (int t = 0; t < N + cp; ++t)
        for (int l = 0; l < L; ++l) linear.col(t + l) += ch.taps()[static_cast<std::size_t>(l)] * ext.col(t);
    const ComplexRows rx = linear.middleCols(cp, N);
    const BasebandFrame ref = apply_channel(s, ch, N);
    const double err = (ref.samples - rx).cwiseAbs().maxCoeff();
    return detail::make_check("cyclic_prefix_equivalence", "max abs difference", err, 1e-10);
}

/// White noise through the ideal DDC keeps variance N_0 per subcarrier.
inline ValidationCheck ddc_noise_check(const OracleOptions& opt, int frames = 250)
{
    const OfdmLayout layout = OfdmLayout::symmetric(4096, 4);
    const RfParams rf{2.4e9, 10e9};
    constexpr int B = 16;
    constexpr double N0 = 0.5;
    const auto parts = detail::chunked(static_cast<std::size_t>(frames), 25, opt.threads, [&](std::size_t a, std::size_t e) {
        double acc = 0.0;
        for (std::size_t f = a; f < e; ++f) {
            RandomStream rs = make_stream(opt.seed, StreamPurpose::validation, f + 1, 5);
            const RfFrame w = add_noise_and_dither(RfFrame{RealRows::Zero(B, layout.samples), FrameStage::analog}, N0, {}, rs);
            acc += ddc(w, layout, rf).values.squaredNorm();
        }
        return acc;
    });
    double total = 0.0;
    for (double p : parts) total += p;
    const double measured = total / (static_cast<double>(frames) * B * layout.subcarrier_count());
    return detail::make_check("ddc_noise_calibration", "relative error of per-subcarrier noise power",
                              std::abs(measured / N0 - 1.0), 0.03);
}

/// (G H^_k)^dagger G H^_k = I on every occupied subcarrier.
inline ValidationCheck zf_left_inverse_check(const OracleOptions& opt)
{
    const auto sys = detail::small_system(opt.seed, 6, 32, 4, 4096, 4, 1000, 10.0);
    const DiagonalGain g = signal_gain(sys.channel, sys.model);
    double err = 0.0;
    for (int k : sys.model.layout.occupied) {
        const ComplexGrid gh = g.diag.asDiagonal() * sys.channel.response(k);
        const ComplexGrid a = zf_matrix(sys.channel.response(k), g, k);
        err = std::max(err, (a * gh - ComplexGrid::Identity(gh.cols(), gh.cols())).cwiseAbs().maxCoeff());
    }
    return detail::make_check("zf_left_inverse", "max abs deviation from identity", err, 1e-10);
}

/// idft(dft(x)) = x for a power-of-two and a non-power-of-two length.
inline ValidationCheck dft_round_trip_check(const OracleOptions& opt)
{
    double err = 0.0;
    for (std::size_t n : {std::size_t{4096}, std::size_t{60}}) {
        RandomStream rs = make_stream(opt.seed, StreamPurpose::validation, 0, 7 + n);
        std::vector<cplx> x(n);
        double peak = 0.0;
        for (cplx& v : x) {
            v = rs.complex_gaussian(1.0);
            peak = std::max(peak, std::abs(v));
        }
        const std::vector<cplx> back = idft(dft(x));
        for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(back[i] - x[i]) / peak);
    }
    return detail::make_check("dft_round_trip", "max abs error relative to max |x|", err, 1e-12);
}

/// Every oracle, in a fixed order.
inline std::vector<ValidationCheck> run_oracles(const OracleOptions& opt = {})
{
    std::vector<ValidationCheck> out;
    const auto run = [&](auto&& fn) {
        out.push_back(fn());
        const ValidationCheck& c = out.back();
        if (opt.log)
            *opt.log << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << harness::detail::format("%.3e", c.value)
                     << " (tol " << harness::detail::format("%.1e", c.tolerance) << ")"
                     << (c.detail.empty() ? "" : "; " + c.detail) << "\n";
    };
    run([&] { return dft_round_trip_check(opt); });
    run([&] { return cyclic_prefix_check(opt); });
    run([&] { return zf_left_inverse_check(opt); });
    run([&] { return ddc_noise_check(opt); });
    run([&] { return arcsine_check(opt); });
    run([&] { return bussgang_gain_check(opt); });
    run([&] { return distortion_check(opt); });
    return out;
}

} // namespace rfmimo::validation
