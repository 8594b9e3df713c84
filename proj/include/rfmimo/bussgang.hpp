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
#include "rfmimo/rxchain.hpp"
#include "rfmimo/system.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace rfmimo {

/// How the distortion covariance sums over lags.
///
/// `one_sided`: C_k = (4/pi) sum_{m=0}^{M-1} [asin(C[m]) - C[m]] e^{-j phi_k m},
/// the closed form used by the analytical EVM.
/// `two_sided_windowed`: the exact second moment of the length-N DDC sum for
/// a stationary Gaussian input, (4/pi) sum_{|m|<N} (1 - |m|/N) [...] e^{-j phi_k m}.
enum class DistortionLagSum { one_sided, two_sided_windowed };

inline std::string to_string(DistortionLagSum s)
{
    return s == DistortionLagSum::one_sided ? "one_sided" : "two_sided_windowed";
}

inline DistortionLagSum parse_lag_sum(const std::string& s)
{
    if (s == "one_sided") return DistortionLagSum::one_sided;
    if (s == "two_sided_windowed" || s == "two_sided") return DistortionLagSum::two_sided_windowed;
    throw InvalidArgument("unknown distortion lag sum '" + s + "'");
}

struct AnalyticalOptions {
    DistortionLagSum lag_sum = DistortionLagSum::one_sided;
    int max_lags = 0; // 0 means all N lags
};

/// Lag-indexed real B x B autocovariances.
struct Autocovariance {
    std::vector<int> lags;
    std::vector<RealGrid> values;

    const RealGrid& at(int lag) const
    {
        const auto it = std::find(lags.begin(), lags.end(), lag);
        if (it == lags.end()) throw InvalidArgument("autocovariance: lag " + std::to_string(lag) + " not present");
        return values[static_cast<std::size_t>(it - lags.begin())];
    }

    bool has(int lag) const { return std::find(lags.begin(), lags.end(), lag) != lags.end(); }
};

namespace detail {

/// Phase in cycles of subcarrier k at lag m: (k m mod N)/N + frac((f_c/f_s) m).
inline cplx subcarrier_phase(int k, std::int64_t m, int samples, double normalized_carrier)
{
    return unit_root(static_cast<std::int64_t>(k) * m, samples) * unit_phase(normalized_carrier * static_cast<double>(m));
}

inline void require_responses(const ChannelRealization& ch, const OfdmLayout& layout)
{
    for (int k : layout.occupied)
        if (!ch.has_response(k) || ch.response_samples() != layout.samples)
            throw InvalidArgument("missing frequency response for subcarrier " + std::to_string(k) +
                                  " (call cache_responses first)");
}

} // namespace detail

/// R_x[m] = Re{(E_s/N) sum_{k in S} H^_k H^_k^H e^{j 2 pi (k/N + f_c/f_s) m}}.
inline Autocovariance autocov_x(const ChannelRealization& ch, double symbol_energy, const OfdmLayout& layout,
                                const RfParams& rf, std::span<const int> lags)
{
    layout.validate();
    rf.validate();
    detail::require_responses(ch, layout);
    const double scale = symbol_energy / layout.samples;
    std::vector<ComplexGrid> gram;
    for (int k : layout.occupied) gram.push_back(scale * ch.response(k) * ch.response(k).adjoint());
    Autocovariance out;
    for (int m : lags) {
        ComplexGrid acc = ComplexGrid::Zero(ch.antennas(), ch.antennas());
        for (std::size_t i = 0; i < gram.size(); ++i)
            acc += gram[i] * detail::subcarrier_phase(layout.occupied[i], m, layout.samples, rf.normalized_carrier());
        out.lags.push_back(m);
        out.values.push_back(acc.real());
    }
    return out;
}

/// Adds (N_0 + D_0)/2 to the zero lag; other lags are unchanged.
inline Autocovariance autocov_y(Autocovariance rx, double noise_power, double dither_power)
{
    require(noise_power >= 0.0 && dither_power >= 0.0, "autocov_y: N_0 and D_0 must be >= 0");
    for (std::size_t i = 0; i < rx.lags.size(); ++i)
        if (rx.lags[i] == 0) {
            auto& r0 = rx.values[i];
            r0.diagonal().array() += (noise_power + dither_power) / 2.0;
        }
    return rx;
}

/// G = sqrt(2/pi) D_y^{-1/2}, D_y = diag(R_y[0]).
inline DiagonalGain bussgang_gain(const RealGrid& ry0)
{
    require(ry0.rows() == ry0.cols() && ry0.rows() >= 1, "bussgang_gain: expected square R_y[0]");
    DiagonalGain g{RealVector(ry0.rows())};
    for (Eigen::Index b = 0; b < ry0.rows(); ++b) {
        const double d = ry0(b, b);
        if (!(d > 0.0) || !std::isfinite(d))
            throw DegenerateInput("bussgang_gain: antenna " + std::to_string(b) +
                                  " has no signal and no noise at the quantizer input");
        g.diag[b] = std::sqrt(2.0 / std::numbers::pi) / std::sqrt(d);
    }
    return g;
}

/// D^{-1/2} R D^{-1/2} with D = diag(dy).
inline RealGrid normalize_correlation(const RealGrid& r, const RealVector& dy)
{
    const RealVector s = dy.array().rsqrt();
    return s.asDiagonal() * r * s.asDiagonal();
}

/// Bussgang gain of the quantizer input for a channel and signal model,
/// from R_y[0] = R_x[0] + ((N_0 + D_0)/2) I only.
inline DiagonalGain signal_gain(const ChannelRealization& ch, const SignalModel& model)
{
    model.validate();
    const std::vector<int> zero{0};
    const Autocovariance ry = autocov_y(autocov_x(ch, model.symbol_energy, model.layout, model.rf, zero),
                                        model.noise_power, model.dither.power);
    return bussgang_gain(ry.values.front());
}

/// Van Vleck: R_z[m] = (2/pi) asin(D_y^{-1/2} R_y[m] D_y^{-1/2}).
inline Autocovariance arcsine_autocov(const Autocovariance& ry, const RealVector& dy)
{
    Autocovariance out;
    out.lags = ry.lags;
    for (const auto& r : ry.values) {
        RealGrid rz = (2.0 / std::numbers::pi) * elementwise_arcsine(normalize_correlation(r, dy));
        out.values.push_back(std::move(rz));
    }
    for (std::size_t i = 0; i < out.lags.size(); ++i)
        if (out.lags[i] == 0) out.values[i].diagonal().setOnes();
    return out;
}

/// Hermitian part of a distortion covariance and the relative size of the
/// discarded anti-Hermitian residual, ||M - M^H||_F / ||M + M^H||_F.
struct DistortionCovariance {
    int subcarrier = 0;
    ComplexGrid hermitian;
    double antihermitian_ratio = 0.0;
};

namespace detail {

inline DistortionCovariance finish_distortion(int k, const ComplexGrid& raw)
{
    DistortionCovariance out;
    out.subcarrier = k;
    out.hermitian = 0.5 * (raw + raw.adjoint());
    const double herm = (raw + raw.adjoint()).norm();
    const double anti = (raw - raw.adjoint()).norm();
    out.antihermitian_ratio = herm > 0.0 ? anti / herm : 0.0;
    return out;
}

inline double lag_weight(DistortionLagSum mode, int m, int samples)
{
    if (mode == DistortionLagSum::one_sided || m == 0) return 1.0;
    return 1.0 - static_cast<double>(m) / samples;
}

} // namespace detail

/// C_e,k from materialized R_y lags 0..M-1 (M = number of consecutive lags
/// present starting at 0).
inline DistortionCovariance distortion_cov(const Autocovariance& ry, const RealVector& dy, int k,
                                           const OfdmLayout& layout, const RfParams& rf,
                                           DistortionLagSum mode = DistortionLagSum::one_sided)
{
    require(ry.has(0), "distortion_cov: lag 0 missing");
    const auto b = static_cast<Eigen::Index>(dy.size());
    ComplexGrid acc = ComplexGrid::Zero(b, b);
    for (int m = 0; m < layout.samples && ry.has(m); ++m) {
        const RealGrid c = normalize_correlation(ry.at(m), dy);
        const RealGrid f = elementwise_arcsine(c) - c;
        const cplx phase = std::conj(detail::subcarrier_phase(k, m, layout.samples, rf.normalized_carrier()));
        if (mode == DistortionLagSum::one_sided || m == 0) {
            acc += f.cast<cplx>() * phase;
        } else {
            const double w = detail::lag_weight(mode, m, layout.samples);
            acc += w * (f.cast<cplx>() * phase + f.transpose().cast<cplx>() * std::conj(phase));
        }
    }
    return detail::finish_distortion(k, (4.0 / std::numbers::pi) * acc);
}

/// Second-order description of the quantizer input and output for one
/// channel realization, with distortion covariances for every occupied k.
struct SecondOrderStats {
    std::vector<int> occupied;
    RealGrid rx0;
    RealGrid ry0;
    RealVector dy;
    DiagonalGain gain;
    std::vector<DistortionCovariance> distortion;
    double effective_noise = 0.0;
};

/// Streaming lag model for one channel realization.
///
/// Holds the per-subcarrier Gram matrices (E_s/N) H^_k H^_k^H and evaluates
/// any R_x[m], R_y[m], normalized correlation or R_z[m] on demand, so that
/// sums over all N lags never keep more than one lag resident.
class LagModel {
public:
    LagModel(const ChannelRealization& ch, const SignalModel& model)
        : layout_(model.layout), rf_(model.rf), antennas_(ch.antennas()), effective_noise_(model.effective_noise())
    {
        model.validate();
        detail::require_responses(ch, layout_);
        const auto b = static_cast<std::size_t>(antennas_);
        const double scale = model.symbol_energy / layout_.samples;
        gram_re_.resize(layout_.occupied.size());
        gram_im_.resize(layout_.occupied.size());
        RealGrid rx0 = RealGrid::Zero(antennas_, antennas_);
        for (std::size_t i = 0; i < layout_.occupied.size(); ++i) {
            const ComplexGrid& h = ch.response(layout_.occupied[i]);
            const ComplexGrid p = scale * h * h.adjoint();
            gram_re_[i].resize(b * b);
            gram_im_[i].resize(b * b);
            Eigen::Map<RealGrid>(gram_re_[i].data(), antennas_, antennas_) = p.real();
            Eigen::Map<RealGrid>(gram_im_[i].data(), antennas_, antennas_) = p.imag();
            rx0 += p.real();
        }
        rx0_ = rx0;
        ry0_ = rx0;
        ry0_.diagonal().array() += effective_noise_ / 2.0;
        dy_ = ry0_.diagonal();
        gain_ = bussgang_gain(ry0_);
        const RealVector s = dy_.array().rsqrt();
        norm_.resize(b * b);
        for (std::size_t j = 0; j < b; ++j)
            for (std::size_t i = 0; i < b; ++i) norm_[j * b + i] = s[static_cast<Eigen::Index>(i)] * s[static_cast<Eigen::Index>(j)];
    }

    int antennas() const { return antennas_; }
    const OfdmLayout& layout() const { return layout_; }
    const RfParams& rf() const { return rf_; }
    const RealGrid& rx0() const { return rx0_; }
    const RealGrid& ry0() const { return ry0_; }
    const RealVector& dy() const { return dy_; }
    const DiagonalGain& gain() const { return gain_; }
    double effective_noise() const { return effective_noise_; }

    /// e^{j 2 pi (k/N + f_c/f_s) m} for every occupied k.
    void phases(std::int64_t m, std::vector<cplx>& out) const
    {
        out.resize(layout_.occupied.size());
        const cplx carrier = unit_phase(rf_.normalized_carrier() * static_cast<double>(m));
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = unit_root(static_cast<std::int64_t>(layout_.occupied[i]) * m, layout_.samples) * carrier;
    }

    /// Column-major R_x[m] into `out` (B*B entries).
    void rx_into(std::span<const cplx> phase, std::span<double> out) const
    {
        std::fill(out.begin(), out.end(), 0.0);
        const std::size_t n = out.size();
        for (std::size_t i = 0; i < phase.size(); ++i) {
            const double c = phase[i].real();
            const double s = phase[i].imag();
            const double* pr = gram_re_[i].data();
            const double* pi = gram_im_[i].data();
            for (std::size_t e = 0; e < n; ++e) out[e] += pr[e] * c - pi[e] * s;
        }
    }

    /// Normalized correlation D_y^{-1/2} R_y[m] D_y^{-1/2}, column-major.
    void normalized_into(std::int64_t m, std::span<const cplx> phase, std::span<double> out) const
    {
        rx_into(phase, out);
        const std::size_t b = static_cast<std::size_t>(antennas_);
        if (m == 0)
            for (std::size_t i = 0; i < b; ++i) out[i * b + i] += effective_noise_ / 2.0;
        for (std::size_t e = 0; e < out.size(); ++e) out[e] *= norm_[e];
        if (m == 0)
            for (std::size_t i = 0; i < b; ++i) out[i * b + i] = 1.0;
    }

    /// R_x[m]_{bb}; the Gram diagonals are real.
    double rx_diagonal(int b, std::span<const cplx> phase) const
    {
        const std::size_t e = static_cast<std::size_t>(b) * static_cast<std::size_t>(antennas_) + static_cast<std::size_t>(b);
        double acc = 0.0;
        for (std::size_t i = 0; i < phase.size(); ++i) acc += gram_re_[i][e] * phase[i].real();
        return acc;
    }

    RealGrid rx(std::int64_t m) const
    {
        std::vector<cplx> ph;
        phases(m, ph);
        RealGrid r(antennas_, antennas_);
        rx_into(ph, std::span<double>(r.data(), static_cast<std::size_t>(r.size())));
        return r;
    }

    RealGrid ry(std::int64_t m) const
    {
        RealGrid r = rx(m);
        if (m == 0) r.diagonal().array() += effective_noise_ / 2.0;
        return r;
    }

    RealGrid normalized(std::int64_t m) const
    {
        std::vector<cplx> ph;
        phases(m, ph);
        RealGrid r(antennas_, antennas_);
        normalized_into(m, ph, std::span<double>(r.data(), static_cast<std::size_t>(r.size())));
        return r;
    }

    RealGrid rz(std::int64_t m) const { return (2.0 / std::numbers::pi) * elementwise_arcsine(normalized(m)); }

    int lag_count(int max_lags) const
    {
        return max_lags > 0 ? std::min(max_lags, layout_.samples) : layout_.samples;
    }

    /// Full C_e,k for every occupied k, streaming over lags.
    std::vector<DistortionCovariance> distortion_covariances(const AnalyticalOptions& opt = {}) const
    {
        const std::size_t S = layout_.occupied.size();
        const auto b = static_cast<Eigen::Index>(antennas_);
        std::vector<ComplexGrid> acc(S, ComplexGrid::Zero(b, b));
        RealGrid c(b, b);
        std::vector<cplx> ph;
        const int lags = lag_count(opt.max_lags);
        for (int m = 0; m < lags; ++m) {
            phases(m, ph);
            normalized_into(m, ph, std::span<double>(c.data(), static_cast<std::size_t>(c.size())));
            const RealGrid f = elementwise_arcsine(c) - c;
            for (std::size_t i = 0; i < S; ++i) {
                const cplx down = std::conj(ph[i]);
                if (opt.lag_sum == DistortionLagSum::one_sided || m == 0) {
                    acc[i] += f.cast<cplx>() * down;
                } else {
                    const double w = detail::lag_weight(opt.lag_sum, m, layout_.samples);
                    acc[i] += w * (f.cast<cplx>() * down + f.transpose().cast<cplx>() * ph[i]);
                }
            }
        }
        std::vector<DistortionCovariance> out;
        for (std::size_t i = 0; i < S; ++i)
            out.push_back(detail::finish_distortion(layout_.occupied[i], (4.0 / std::numbers::pi) * acc[i]));
        return out;
    }

    /// tr(W_k C_e,k) for every occupied k without forming C_e,k.
    ///
    /// `weights[i]` is a Hermitian B x B matrix for subcarrier occupied[i]
    /// (A^_k^H A^_k for the EVM numerator). The returned complex traces use
    /// the raw (non-Hermitized) sum; their real part equals tr(W_k Herm(C_e,k)).
    std::vector<cplx> distortion_traces(std::span<const ComplexGrid> weights, const AnalyticalOptions& opt = {}) const
    {
        const std::size_t S = layout_.occupied.size();
        require(weights.size() == S, "distortion_traces: need one weight matrix per occupied subcarrier");
        const std::size_t b = static_cast<std::size_t>(antennas_);
        const std::size_t n = b * b;
        // w_t[i][(r, c)] = W_k(c, r), so that tr(W C) = sum_e w_t[e] C[e]
        std::vector<std::vector<double>> wre(S, std::vector<double>(n)), wim(S, std::vector<double>(n));
        for (std::size_t i = 0; i < S; ++i) {
            require(weights[i].rows() == antennas_ && weights[i].cols() == antennas_,
                    "distortion_traces: weight dimension mismatch");
            for (std::size_t col = 0; col < b; ++col)
                for (std::size_t row = 0; row < b; ++row) {
                    const cplx w = weights[i](static_cast<Eigen::Index>(col), static_cast<Eigen::Index>(row));
                    wre[i][col * b + row] = w.real();
                    wim[i][col * b + row] = w.imag();
                }
        }
        std::vector<double> c(n), f(n);
        std::vector<cplx> ph;
        std::vector<cplx> acc(S, cplx{0.0, 0.0});
        const int lags = lag_count(opt.max_lags);
        for (int m = 0; m < lags; ++m) {
            phases(m, ph);
            normalized_into(m, ph, c);
            for (std::size_t e = 0; e < n; ++e) {
                double v = c[e];
                if (std::abs(v) > 1.0) {
                    if (!(std::abs(v) <= 1.0 + kArcsineClipTolerance))
                        throw DomainError("normalized correlation " + std::to_string(v) + " at lag " +
                                          std::to_string(m) + " outside [-1, 1]");
                    v = v > 0.0 ? 1.0 : -1.0;
                }
                f[e] = std::asin(v) - v;
            }
            for (std::size_t i = 0; i < S; ++i) {
                double tre = 0.0, tim = 0.0;
                const double* pr = wre[i].data();
                const double* pi = wim[i].data();
                for (std::size_t e = 0; e < n; ++e) {
                    tre += pr[e] * f[e];
                    tim += pi[e] * f[e];
                }
                const cplx t{tre, tim};
                const cplx down = std::conj(ph[i]);
                if (opt.lag_sum == DistortionLagSum::one_sided || m == 0) {
                    acc[i] += t * down;
                } else {
                    // the m and -m terms: f[-m] = f[m]^T gives tr(W f^T) = conj(t)
                    const double w = detail::lag_weight(opt.lag_sum, m, layout_.samples);
                    acc[i] += w * 2.0 * (t * down).real();
                }
            }
        }
        for (cplx& a : acc) a *= 4.0 / std::numbers::pi;
        return acc;
    }

    SecondOrderStats stats(const AnalyticalOptions& opt = {}) const
    {
        SecondOrderStats s;
        s.occupied = layout_.occupied;
        s.rx0 = rx0_;
        s.ry0 = ry0_;
        s.dy = dy_;
        s.gain = gain_;
        s.distortion = distortion_covariances(opt);
        s.effective_noise = effective_noise_;
        return s;
    }

private:
    OfdmLayout layout_;
    RfParams rf_;
    int antennas_;
    double effective_noise_;
    std::vector<std::vector<double>> gram_re_;
    std::vector<std::vector<double>> gram_im_;
    std::vector<double> norm_;
    RealGrid rx0_;
    RealGrid ry0_;
    RealVector dy_;
    DiagonalGain gain_;
};

/// Stats with Gaussian dither of power D_0 folded into the zero lag.
inline SecondOrderStats dithered_stats(const ChannelRealization& ch, const SignalModel& model,
                                       const AnalyticalOptions& opt = {})
{
    if (model.dither.mode != DitherMode::gaussian)
        throw UnsupportedMode("dithered_stats: requires Gaussian dither, got " + to_string(model.dither.mode));
    return LagModel(ch, model).stats(opt);
}

// ---------------------------------------------------------------------------
// Analytical EVM
// ---------------------------------------------------------------------------

/// Closed-form EVM pieces for one channel realization.
struct AnalyticalEvm {
    std::vector<int> occupied;
    std::vector<double> numerator;   // Re tr(A (N_eff G^2 + C) A^H) per k
    std::vector<double> imag_residual; // Im of the distortion trace per k
    double denominator = 0.0;        // E_s U S

    double numerator_sum() const
    {
        double s = 0.0;
        for (double v : numerator) s += v;
        return s;
    }
    double ratio() const { return numerator_sum() / denominator; }
    double percent() const { return 100.0 * std::sqrt(ratio()); }

    /// |sum Im| / sum Re over subcarriers.
    double imag_ratio() const
    {
        double im = 0.0;
        for (double v : imag_residual) im += v;
        return std::abs(im) / numerator_sum();
    }
};

/// EVM of DDC + ZF with 1-bit ADCs from the Bussgang/arcsine model.
inline AnalyticalEvm analytical_evm(const ChannelRealization& ch, const SignalModel& model,
                                    const AnalyticalOptions& opt = {})
{
    if (model.dither.mode == DitherMode::uniform_binary)
        throw UnsupportedMode("analytical EVM is only available without dither or with Gaussian dither");
    const LagModel lm(ch, model);
    const DiagonalGain& g = lm.gain();
    const double n_eff = model.effective_noise();

    AnalyticalEvm out;
    out.occupied = model.layout.occupied;
    out.denominator = model.symbol_energy * ch.users() * model.layout.subcarrier_count();
    std::vector<ComplexGrid> weights;
    std::vector<double> noise_terms;
    for (int k : model.layout.occupied) {
        const ComplexGrid a = zf_matrix(ch.response(k), g, k);
        const ComplexGrid w = a.adjoint() * a;
        // tr(A N_eff G G A^H) = N_eff sum_b G_b^2 W_bb
        double noise = 0.0;
        for (Eigen::Index b = 0; b < w.rows(); ++b) noise += g.diag[b] * g.diag[b] * w(b, b).real();
        noise_terms.push_back(n_eff * noise);
        weights.push_back(w);
    }
    const std::vector<cplx> traces = lm.distortion_traces(weights, opt);
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const double num = noise_terms[i] + traces[i].real();
        if (!(num > 0.0))
            throw NumericalError("analytical EVM numerator is not positive on subcarrier " +
                                 std::to_string(model.layout.occupied[i]));
        out.numerator.push_back(num);
        out.imag_residual.push_back(traces[i].imag());
    }
    return out;
}

/// ZF noise-enhancement EVM without quantization (G = I, no distortion):
/// N_eff sum_k tr((H^_k^H H^_k)^{-1}) over E_s U S.
inline AnalyticalEvm analytical_evm_unquantized(const ChannelRealization& ch, const SignalModel& model)
{
    model.validate();
    detail::require_responses(ch, model.layout);
    AnalyticalEvm out;
    out.occupied = model.layout.occupied;
    out.denominator = model.symbol_energy * ch.users() * model.layout.subcarrier_count();
    const DiagonalGain identity = DiagonalGain::identity(ch.antennas());
    for (int k : model.layout.occupied) {
        const ComplexGrid a = zf_matrix(ch.response(k), identity, k);
        out.numerator.push_back(model.effective_noise() * (a * a.adjoint()).trace().real());
        out.imag_residual.push_back(0.0);
    }
    return out;
}

/// Pooled EVM over several realizations: sqrt(mean numerator / (E_s U S)).
inline double pooled_percent(std::span<const AnalyticalEvm> parts)
{
    require(!parts.empty(), "pooled_percent: empty collection");
    double num = 0.0, den = 0.0;
    for (const auto& p : parts) {
        num += p.numerator_sum();
        den += p.denominator;
    }
    return 100.0 * std::sqrt(num / den);
}

// ---------------------------------------------------------------------------
// Analytical PSD
// ---------------------------------------------------------------------------

enum class PsdComponent { total, signal, distortion };

/// Lag weights applied before the DFT of the autocovariance.
struct LagWindow {
    std::vector<double> weights; // weights[m] for m = 0..M-1, weights[0] = 1

    /// Plain truncation to M lags.
    static LagWindow rectangular(std::size_t lags) { return {std::vector<double>(lags, 1.0)}; }

    /// Normalized window autocorrelation of a Hann segment of length M: the
    /// lag weighting a Welch estimate with that segment applies in expectation.
    static LagWindow welch_hann(std::size_t segment_len)
    {
        const std::vector<double> w = hann_window(segment_len);
        double energy = 0.0;
        for (double v : w) energy += v * v;
        std::vector<double> out(segment_len);
        for (std::size_t m = 0; m < segment_len; ++m) {
            double acc = 0.0;
            for (std::size_t n = 0; n + m < segment_len; ++n) acc += w[n] * w[n + m];
            out[m] = acc / energy;
        }
        return {out};
    }
};

/// Antenna-averaged (or single-antenna) diagonal autocovariance of the
/// requested component over lags 0..M-1. `signal` is diag(G R_x[m] G),
/// `distortion` is diag(R_z[m] - G R_y[m] G).
inline std::vector<double> diagonal_autocov(const LagModel& lm, std::size_t lags, PsdComponent component,
                                            int antenna = -1)
{
    const int b_count = lm.antennas();
    require(antenna < b_count, "diagonal_autocov: antenna index out of range");
    std::vector<double> out(lags, 0.0);
    std::vector<cplx> ph;
    const RealVector& dy = lm.dy();
    constexpr double two_over_pi = 2.0 / std::numbers::pi;
    for (std::size_t m = 0; m < lags; ++m) {
        lm.phases(static_cast<std::int64_t>(m), ph);
        double acc = 0.0;
        int used = 0;
        for (int b = 0; b < b_count; ++b) {
            if (antenna >= 0 && b != antenna) continue;
            const double rx = lm.rx_diagonal(b, ph);
            const double ry = rx + (m == 0 ? lm.effective_noise() / 2.0 : 0.0);
            const double c = m == 0 ? 1.0 : ry / dy[b];
            const double rz = two_over_pi * clipped_arcsine(c);
            switch (component) {
            case PsdComponent::total: acc += rz; break;
            case PsdComponent::signal: acc += two_over_pi * rx / dy[b]; break;
            case PsdComponent::distortion: acc += rz - two_over_pi * c; break;
            }
            ++used;
        }
        out[m] = acc / used;
    }
    return out;
}

/// One-sided PSD from a diagonal autocovariance r[0..M-1] (r[-m] = r[m]):
/// S(f) = (2/f_s) sum_{|m|<M} v[|m|] r[|m|] e^{-j 2 pi f m / f_s} on the grid
/// f_i = i f_s / M, i = 0..M/2 (factor 1 instead of 2 at DC and f_s/2).
inline PsdEstimate psd_from_autocov(std::span<const double> r, const LagWindow& window, double sample_rate_hz,
                                    bool antenna_averaged = true)
{
    const std::size_t M = r.size();
    require(M >= 2 && std::has_single_bit(M), "psd_from_autocov: lag count must be a power of two");
    require(window.weights.size() >= M, "psd_from_autocov: lag window shorter than the autocovariance");
    std::vector<cplx> a(M, cplx{0.0, 0.0});
    a[0] = window.weights[0] * r[0];
    for (std::size_t m = 1; m < M; ++m) {
        const double v = window.weights[m] * r[m];
        a[m] += v;     // lag +m
        a[M - m] += v; // lag -m wraps to M - m on the M-point grid
    }
    const std::vector<cplx> spec = dft(a);
    PsdEstimate psd;
    psd.antenna_averaged = antenna_averaged;
    const std::size_t bins = M / 2 + 1;
    psd.freq_hz.resize(bins);
    psd.density.resize(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        psd.freq_hz[i] = sample_rate_hz * static_cast<double>(i) / static_cast<double>(M);
        const double one_sided = (i == 0 || i == bins - 1) ? 1.0 : 2.0;
        psd.density[i] = one_sided * spec[i].real() / sample_rate_hz;
    }
    return psd;
}

/// PSD of the 1-bit output (or one of its Bussgang components) from the DFT
/// of its autocovariance. `lags` defaults to N; `window` defaults to the
/// lag weighting of a Welch/Hann estimate with `lags`-sample segments.
inline PsdEstimate analytical_psd(const LagModel& lm, PsdComponent component = PsdComponent::total,
                                  bool antenna_average = true, int antenna = 0, std::size_t lags = 0,
                                  const LagWindow* window = nullptr)
{
    if (lags == 0) lags = static_cast<std::size_t>(lm.layout().samples);
    const LagWindow fallback = window ? LagWindow{} : LagWindow::welch_hann(lags);
    const LagWindow& w = window ? *window : fallback;
    const std::vector<double> r = diagonal_autocov(lm, lags, component, antenna_average ? -1 : antenna);
    return psd_from_autocov(r, w, lm.rf().sample_rate_hz, antenna_average);
}

} // namespace rfmimo
