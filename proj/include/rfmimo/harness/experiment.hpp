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
#include "rfmimo/harness/config.hpp"
#include "rfmimo/harness/parallel.hpp"
#include "rfmimo/harness/report.hpp"
#include "rfmimo/quantizer.hpp"
#include "rfmimo/rxchain.hpp"
#include "rfmimo/txchain.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace rfmimo::harness {

struct RunOptions {
    int threads = 1;
    std::ostream* log = nullptr; // progress and warnings; never part of the output files
};

// ---------------------------------------------------------------------------
// Channels
// ---------------------------------------------------------------------------

/// Channel realizations for one antenna count with occupied responses
/// cached. Realization c is drawn from stream (channel, c, B), so it does
/// not depend on how many realizations are requested.
class ChannelSet {
public:
    ChannelSet() = default;

    static ChannelSet draw(const ExperimentConfig& cfg, int antennas, int count, int threads)
    {
        require(count >= 1, "ChannelSet: need at least one channel");
        ChannelSet set;
        set.antennas_ = antennas;
        const OfdmLayout layout = cfg.layout();
        set.channels_ = parallel_map(static_cast<std::size_t>(count), threads, [&](std::size_t c) {
            RandomStream rs = make_stream(cfg.master_seed, StreamPurpose::channel, c, static_cast<std::uint64_t>(antennas));
            ChannelRealization ch = draw_channel(antennas, cfg.users, cfg.taps, rs);
            ch.cache_responses(layout.occupied, layout.samples);
            return ch;
        });
        return set;
    }

    int antennas() const { return antennas_; }
    std::size_t size() const { return channels_.size(); }
    const ChannelRealization& operator[](std::size_t i) const { return channels_.at(i); }

private:
    int antennas_ = 0;
    std::vector<ChannelRealization> channels_;
};

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

struct PointSpec {
    double snr_db = 10.0;
    Quantizer quantizer = Quantizer::one_bit;
    DitherSpec dither;
    int n_channels = 1;
    int n_symbols = 1;
    bool collect_constellation = false;
    bool collect_psd = false;
};

struct PointResult {
    EvmAccumulator evm;
    std::vector<double> channel_ratios; // per-channel EVM^2 (as error/symbol energy)
    std::vector<ConstellationPoint> constellation;
    std::optional<WelchAccumulator> psd;

    double percent() const { return evm.percent(); }

    /// Normal-approximation 95% half-width of the EVM in percent, propagated
    /// from the spread of the per-channel EVM^2 values.
    double ci_halfwidth_pct() const
    {
        const std::size_t n = channel_ratios.size();
        if (n < 2) return 0.0;
        double mean = 0.0;
        for (double r : channel_ratios) mean += r;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double r : channel_ratios) var += (r - mean) * (r - mean);
        var /= static_cast<double>(n - 1);
        const double hw_ratio = 1.96 * std::sqrt(var / static_cast<double>(n));
        const double ratio = evm.ratio();
        return ratio > 0.0 ? 100.0 * hw_ratio / (2.0 * std::sqrt(ratio)) : 0.0;
    }
};

/// Combiner gain: Bussgang gain for 1-bit ADCs, identity otherwise.
inline DiagonalGain combiner_gain(const ChannelRealization& ch, const SignalModel& model, Quantizer q)
{
    return q == Quantizer::one_bit ? signal_gain(ch, model) : DiagonalGain::identity(ch.antennas());
}

/// Everything one simulated OFDM symbol produces.
struct FrameOutcome {
    FrequencySymbols truth;
    RfFrame input;  // y, before quantization
    RfFrame output; // z (or y for the infinite-resolution baseline)
    SymbolEstimates estimates;
};

/// Full transmit/receive chain for symbol s of channel c.
inline FrameOutcome simulate_frame(const ExperimentConfig& cfg, const ChannelRealization& ch, const DiagonalGain& gain,
                                   const PointSpec& spec, std::size_t c, std::size_t s)
{
    const OfdmLayout layout = cfg.layout();
    const RfParams rf = cfg.rf();
    RandomStream sym_rs = make_stream(cfg.master_seed, StreamPurpose::symbols, c, s);
    RandomStream noise_rs = make_stream(cfg.master_seed, StreamPurpose::noise, c, s);
    RandomStream dither_rs = make_stream(cfg.master_seed, StreamPurpose::dither, c, s);
    FrameOutcome out;
    out.truth = map_qam(sym_rs, cfg.qam_order, cfg.symbol_energy, cfg.users, layout.occupied);
    const RfFrame x = upconvert(apply_channel(out.truth, ch, layout.samples), rf);
    out.input = add_noise_and_dither(x, cfg.noise_power(spec.snr_db), spec.dither, noise_rs, dither_rs);
    out.output = quantize(out.input, spec.quantizer);
    out.estimates = zf_combine(ddc(out.output, layout, rf), ch, gain);
    return out;
}

/// Monte Carlo EVM over the first spec.n_channels channels of `channels`.
inline PointResult simulate_point(const ExperimentConfig& cfg, const ChannelSet& channels, const PointSpec& spec,
                                  const RunOptions& opt = {})
{
    require(spec.n_channels >= 1 && spec.n_symbols >= 1, "simulate_point: trial counts must be >= 1");
    require(static_cast<std::size_t>(spec.n_channels) <= channels.size(), "simulate_point: not enough channels drawn");
    const SignalModel model = cfg.signal_model(spec.snr_db, spec.dither);
    model.validate();

    struct ChannelOutcome {
        EvmAccumulator evm;
        std::vector<ConstellationPoint> points;
        std::optional<WelchAccumulator> psd;
    };
    auto outcomes = parallel_map(static_cast<std::size_t>(spec.n_channels), opt.threads, [&](std::size_t c) {
        const ChannelRealization& ch = channels[c];
        ChannelOutcome o;
        if (spec.collect_psd)
            o.psd.emplace(static_cast<std::size_t>(cfg.psd_segment_len), cfg.sample_rate_hz);
        try {
            const DiagonalGain gain = combiner_gain(ch, model, spec.quantizer);
            for (std::size_t s = 0; s < static_cast<std::size_t>(spec.n_symbols); ++s) {
                const FrameOutcome f = simulate_frame(cfg, ch, gain, spec, c, s);
                o.evm.add(f.estimates, f.truth);
                if (spec.collect_constellation)
                    append_constellation(o.points, static_cast<int>(c), static_cast<int>(s), f.estimates);
                if (o.psd) o.psd->add_frame(f.output);
            }
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " [channel trial " + std::to_string(c) + ", seed " +
                                 std::to_string(cfg.master_seed) + "]");
        }
        return o;
    });

    PointResult result;
    for (auto& o : outcomes) {
        result.evm.merge(o.evm);
        result.channel_ratios.push_back(o.evm.ratio());
        result.constellation.insert(result.constellation.end(), o.points.begin(), o.points.end());
        if (o.psd) {
            if (!result.psd) result.psd = std::move(*o.psd);
            else result.psd->merge(*o.psd);
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Analytical
// ---------------------------------------------------------------------------

/// True when the closed form covers the combination.
inline bool analytical_supported(Quantizer q, DitherMode mode)
{
    return q == Quantizer::infinite || mode != DitherMode::uniform_binary;
}

/// Pooled analytical EVM over the first `n_channels` channels.
inline double analytical_point(const ExperimentConfig& cfg, const ChannelSet& channels, double snr_db, Quantizer q,
                               const DitherSpec& dither, int n_channels, const RunOptions& opt = {})
{
    require(n_channels >= 1 && static_cast<std::size_t>(n_channels) <= channels.size(),
            "analytical_point: not enough channels drawn");
    if (!analytical_supported(q, dither.mode))
        throw UnsupportedMode("analytical EVM is not available for 1-bit ADCs with uniform binary dither");
    const SignalModel model = cfg.signal_model(snr_db, dither);
    const AnalyticalOptions aopt = cfg.analytical_options();
    const auto parts = parallel_map(static_cast<std::size_t>(n_channels), opt.threads, [&](std::size_t c) {
        return q == Quantizer::one_bit ? analytical_evm(channels[c], model, aopt)
                                       : analytical_evm_unquantized(channels[c], model);
    });
    return pooled_percent(parts);
}

// ---------------------------------------------------------------------------
// Dither optimization
// ---------------------------------------------------------------------------

namespace detail {

/// Golden-section minimization of f over [lo, hi]. Returns nullopt when the
/// four bracketing values stop looking unimodal.
inline std::optional<std::pair<double, double>> golden_section(const std::function<double(double)>& f, double lo,
                                                               double hi, double x_tol, double rel_f_tol)
{
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double fa = f(a), fb = f(b);
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int iter = 0; iter < 200; ++iter) {
        const bool unimodal = fc <= std::max(fa, fd) * (1.0 + 1e-12) && fd <= std::max(fc, fb) * (1.0 + 1e-12);
        if (!unimodal) return std::nullopt;
        if (b - a < x_tol || std::abs(fc - fd) <= rel_f_tol * std::min(fc, fd)) break;
        if (fc <= fd) {
            b = d;
            fb = fd;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            fa = fc;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    double best_x = fc <= fd ? c : d;
    double best_f = std::min(fc, fd);
    if (fa < best_f) best_x = a, best_f = fa;
    if (fb < best_f) best_x = b, best_f = fb;
    return std::make_pair(best_x, best_f);
}

} // namespace detail

/// Log-spaced D_0 candidates E_s * 10^x, x uniformly in [-4, 4].
inline std::vector<double> dither_grid(const ExperimentConfig& cfg, int points)
{
    std::vector<double> out;
    for (int i = 0; i < points; ++i) {
        const double x = -4.0 + 8.0 * i / (points - 1);
        out.push_back(cfg.symbol_energy * std::pow(10.0, x));
    }
    return out;
}

/// D_0 minimizing the EVM at one SNR.
///
/// Gaussian dither: golden-section search of the analytical EVM over
/// log10(D_0/E_s) in [-4, 4], falling back to a grid search if the objective
/// is not unimodal. Binary dither: grid search of the Monte Carlo EVM with
/// the reduced trial count. D_0 = 0 is always a candidate.
inline DitherOptimization optimize_dither(const ExperimentConfig& cfg, const ChannelSet& channels, double snr_db,
                                          Quantizer q, DitherMode mode, const RunOptions& opt = {})
{
    require(mode == DitherMode::gaussian || mode == DitherMode::uniform_binary,
            "optimize_dither: mode must be gaussian or uniform_binary");
    const int n_ch = std::min<int>(cfg.opt_channels, static_cast<int>(channels.size()));
    DitherOptimization out;
    out.antennas = channels.antennas();
    out.snr_db = snr_db;
    out.quantizer = q;
    out.mode = mode;

    std::function<double(double)> evm_of_d0;
    if (mode == DitherMode::gaussian) {
        evm_of_d0 = [&](double d0) {
            return analytical_point(cfg, channels, snr_db, q, DitherSpec{DitherMode::gaussian, d0}, n_ch, opt);
        };
    } else {
        evm_of_d0 = [&](double d0) {
            PointSpec spec;
            spec.snr_db = snr_db;
            spec.quantizer = q;
            spec.dither = d0 > 0.0 ? DitherSpec{mode, d0} : DitherSpec{};
            spec.n_channels = n_ch;
            spec.n_symbols = cfg.opt_symbols;
            return simulate_point(cfg, channels, spec, opt).percent();
        };
    }
    auto record = [&](double d0) {
        const double e = evm_of_d0(d0);
        out.evaluations.emplace_back(d0, e);
        return e;
    };

    double best_d0 = 0.0;
    double best = record(0.0);
    out.evm_undithered_pct = best;
    auto consider = [&](double d0, double e) {
        if (e < best) best = e, best_d0 = d0;
    };

    bool use_grid = mode == DitherMode::uniform_binary;
    if (!use_grid) {
        const auto log_obj = [&](double x) { return record(cfg.symbol_energy * std::pow(10.0, x)); };
        const auto gs = detail::golden_section(log_obj, -4.0, 4.0, 0.02, 1e-3);
        if (gs) {
            out.method = "golden_section";
            consider(cfg.symbol_energy * std::pow(10.0, gs->first), gs->second);
        } else {
            out.fallback_used = true;
            use_grid = true;
            if (opt.log)
                *opt.log << "warning: analytical EVM vs D_0 is not unimodal at SNR " << snr_db
                         << " dB; falling back to grid search\n";
        }
    }
    if (use_grid) {
        out.method = "grid";
        for (double d0 : dither_grid(cfg, cfg.opt_grid_points)) consider(d0, record(d0));
    }
    out.d0 = best_d0;
    out.evm_pct = best;
    return out;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// D_0 for one (SNR, mode): zero without dither, optimized or fixed otherwise.
inline DitherSpec resolve_dither(const ExperimentConfig& cfg, const ChannelSet& channels, double snr_db, Quantizer q,
                                 DitherMode mode, const RunOptions& opt, RunReport& report)
{
    if (mode == DitherMode::none) return {};
    if (!cfg.optimize_dither) return {mode, cfg.dither_power};
    DitherOptimization o = optimize_dither(cfg, channels, snr_db, q, mode, opt);
    if (o.fallback_used)
        report.warnings.push_back("dither optimization at B = " + std::to_string(o.antennas) + ", SNR " +
                                  num(snr_db) + " dB fell back to grid search");
    const DitherSpec spec = o.d0 > 0.0 ? DitherSpec{mode, o.d0} : DitherSpec{};
    report.dither.push_back(std::move(o));
    // keep the row labelled with the requested mode even when D_0* = 0
    return {spec.power > 0.0 ? mode : DitherMode::none, spec.power};
}

inline void log_row(const RunOptions& opt, const EvmRow& r)
{
    if (!opt.log) return;
    *opt.log << "B=" << r.antennas << " snr=" << num(r.snr_db) << " " << to_string(r.quantizer) << "/"
             << to_string(r.dither) << " d0=" << num(r.d0);
    if (r.evm_empirical_pct) *opt.log << " evm_emp=" << format("%.3f", *r.evm_empirical_pct) << "%";
    if (r.evm_analytical_pct) *opt.log << " evm_ana=" << format("%.3f", *r.evm_analytical_pct) << "%";
    *opt.log << " (" << format("%.2f", r.wall_time_s) << " s)\n";
}

/// One EVM row: Monte Carlo and/or closed form at a single operating point.
inline EvmRow evaluate_row(const ExperimentConfig& cfg, const ChannelSet& channels, double snr_db, Quantizer q,
                           DitherMode requested, const DitherSpec& dither, bool empirical, bool analytical,
                           const RunOptions& opt, std::vector<ConstellationPoint>* constellation = nullptr)
{
    const auto t0 = std::chrono::steady_clock::now();
    EvmRow row;
    row.antennas = channels.antennas();
    row.users = cfg.users;
    row.snr_db = snr_db;
    row.quantizer = q;
    row.dither = requested;
    row.d0 = dither.power;
    row.n_channels = cfg.n_channels;
    row.n_symbols = empirical ? cfg.n_symbols : 0;
    row.seed = cfg.master_seed;
    if (empirical) {
        PointSpec spec;
        spec.snr_db = snr_db;
        spec.quantizer = q;
        spec.dither = dither;
        spec.n_channels = cfg.n_channels;
        spec.n_symbols = cfg.n_symbols;
        spec.collect_constellation = constellation != nullptr;
        PointResult res = simulate_point(cfg, channels, spec, opt);
        row.evm_empirical_pct = res.percent();
        row.ci_halfwidth_pct = res.ci_halfwidth_pct();
        if (constellation) *constellation = std::move(res.constellation);
    }
    if (analytical && analytical_supported(q, dither.mode))
        row.evm_analytical_pct = analytical_point(cfg, channels, snr_db, q, dither, cfg.n_channels, opt);
    row.wall_time_s = seconds_since(t0);
    log_row(opt, row);
    return row;
}

inline std::optional<double> crossing(double x0, double y0, double x1, double y1, double level)
{
    if (y0 == y1) return x0;
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0);
}

} // namespace detail

/// Supported-SNR interval for one curve: starting at the curve minimum, walk
/// outwards until the EVM exceeds `threshold` and interpolate linearly.
inline ThresholdCrossing threshold_window(std::span<const double> snr, std::span<const double> evm,
                                          const ThresholdLine& line)
{
    require(snr.size() == evm.size() && !snr.empty(), "threshold_window: need matching nonempty grids");
    ThresholdCrossing out;
    out.label = line.label;
    out.percent = line.percent;
    const auto imin = static_cast<std::size_t>(std::min_element(evm.begin(), evm.end()) - evm.begin());
    out.min_evm_pct = evm[imin];
    out.snr_at_min_db = snr[imin];
    out.supported = evm[imin] <= line.percent;
    if (!out.supported) return out;
    for (std::size_t i = imin; i > 0; --i)
        if (evm[i - 1] > line.percent) {
            out.low_db = detail::crossing(snr[i - 1], evm[i - 1], snr[i], evm[i], line.percent);
            break;
        }
    for (std::size_t i = imin; i + 1 < evm.size(); ++i)
        if (evm[i + 1] > line.percent) {
            out.high_db = detail::crossing(snr[i], evm[i], snr[i + 1], evm[i + 1], line.percent);
            break;
        }
    return out;
}

/// Threshold windows for every (B, quantizer, dither) curve in `rows`,
/// preferring the analytical column when it is complete.
inline std::vector<ThresholdCrossing> threshold_crossings(const std::vector<EvmRow>& rows,
                                                          const std::vector<ThresholdLine>& lines)
{
    std::vector<ThresholdCrossing> out;
    if (lines.empty()) return out;
    std::vector<bool> used(rows.size(), false);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (used[i]) continue;
        std::vector<const EvmRow*> curve;
        for (std::size_t j = i; j < rows.size(); ++j)
            if (rows[j].antennas == rows[i].antennas && rows[j].quantizer == rows[i].quantizer &&
                rows[j].dither == rows[i].dither) {
                curve.push_back(&rows[j]);
                used[j] = true;
            }
        std::sort(curve.begin(), curve.end(), [](const EvmRow* a, const EvmRow* b) { return a->snr_db < b->snr_db; });
        const bool analytical = std::all_of(curve.begin(), curve.end(), [](const EvmRow* r) { return r->evm_analytical_pct.has_value(); });
        const bool empirical = std::all_of(curve.begin(), curve.end(), [](const EvmRow* r) { return r->evm_empirical_pct.has_value(); });
        if (!analytical && !empirical) continue;
        std::vector<double> snr, evm;
        for (const EvmRow* r : curve) {
            snr.push_back(r->snr_db);
            evm.push_back(analytical ? *r->evm_analytical_pct : *r->evm_empirical_pct);
        }
        for (const ThresholdLine& line : lines) {
            ThresholdCrossing c = threshold_window(snr, evm, line);
            c.antennas = rows[i].antennas;
            c.quantizer = rows[i].quantizer;
            c.dither = rows[i].dither;
            c.source = analytical ? "analytical" : "empirical";
            out.push_back(std::move(c));
        }
    }
    return out;
}

inline int channels_needed(const ExperimentConfig& cfg)
{
    return std::max(cfg.n_channels, cfg.optimize_dither ? cfg.opt_channels : 1);
}

/// `simulate`: first antenna count, every (SNR, quantizer, dither) of the
/// config, with the constellation of the first SNR kept per mode.
inline RunReport run_monte_carlo(const ExperimentConfig& cfg, const RunOptions& opt = {})
{
    cfg.validate();
    RunReport report;
    report.command = "simulate";
    report.config = cfg;
    const int b = cfg.antennas.front();
    if (cfg.antennas.size() > 1) report.warnings.push_back("simulate uses only the first antenna count");
    const ChannelSet channels = ChannelSet::draw(cfg, b, channels_needed(cfg), opt.threads);
    for (std::size_t si = 0; si < cfg.snr_db.size(); ++si)
        for (Quantizer q : cfg.quantizers)
            for (DitherMode mode : cfg.dither_modes) {
                const DitherSpec d = detail::resolve_dither(cfg, channels, cfg.snr_db[si], q, mode, opt, report);
                std::vector<ConstellationPoint> pts;
                report.rows.push_back(detail::evaluate_row(cfg, channels, cfg.snr_db[si], q, mode, d, true,
                                                           cfg.analytical, opt, si == 0 ? &pts : nullptr));
                if (si == 0) report.constellations.push_back({q, mode, d.power, std::move(pts)});
            }
    return report;
}

/// `sweep`: one row per (B, quantizer, dither, SNR) plus threshold windows.
inline RunReport run_sweep(const ExperimentConfig& cfg, const RunOptions& opt = {})
{
    cfg.validate();
    require(cfg.empirical || cfg.analytical, "sweep: enable at least one of empirical and analytical");
    RunReport report;
    report.command = "sweep";
    report.config = cfg;
    for (int b : cfg.antennas) {
        const ChannelSet channels = ChannelSet::draw(cfg, b, channels_needed(cfg), opt.threads);
        for (Quantizer q : cfg.quantizers)
            for (DitherMode mode : cfg.dither_modes)
                for (double snr : cfg.snr_db) {
                    const DitherSpec d = detail::resolve_dither(cfg, channels, snr, q, mode, opt, report);
                    report.rows.push_back(
                        detail::evaluate_row(cfg, channels, snr, q, mode, d, cfg.empirical, cfg.analytical, opt));
                }
    }
    report.crossings = threshold_crossings(report.rows, cfg.evm_thresholds);
    return report;
}

/// `dither-opt`: optimized D_0 per (B, quantizer, dithered mode, SNR) and
/// the EVM rows at the optimum.
inline RunReport run_dither_optimization(ExperimentConfig cfg, const RunOptions& opt = {})
{
    cfg.validate();
    cfg.optimize_dither = true;
    std::vector<DitherMode> modes;
    for (DitherMode m : cfg.dither_modes)
        if (m != DitherMode::none) modes.push_back(m);
    if (modes.empty()) modes.push_back(DitherMode::gaussian);
    RunReport report;
    report.command = "dither-opt";
    report.config = cfg;
    for (int b : cfg.antennas) {
        const ChannelSet channels = ChannelSet::draw(cfg, b, channels_needed(cfg), opt.threads);
        for (Quantizer q : cfg.quantizers)
            for (DitherMode mode : modes)
                for (double snr : cfg.snr_db) {
                    const DitherSpec d = detail::resolve_dither(cfg, channels, snr, q, mode, opt, report);
                    report.rows.push_back(
                        detail::evaluate_row(cfg, channels, snr, q, mode, d, cfg.empirical, cfg.analytical, opt));
                }
    }
    return report;
}

// ---------------------------------------------------------------------------
// PSD
// ---------------------------------------------------------------------------

/// Channel-averaged diagonal autocovariance of the quantizer output (or of
/// y for the infinite-resolution receiver) over `lags` lags.
inline std::vector<double> mean_output_autocov(const ExperimentConfig& cfg, const ChannelSet& channels,
                                               const SignalModel& model, Quantizer q, PsdComponent component,
                                               std::size_t lags, const RunOptions& opt)
{
    const auto parts = parallel_map(static_cast<std::size_t>(cfg.n_channels), opt.threads, [&](std::size_t c) {
        const LagModel lm(channels[c], model);
        if (q == Quantizer::one_bit) return diagonal_autocov(lm, lags, component);
        std::vector<double> r(lags, 0.0);
        if (component == PsdComponent::distortion) return r;
        std::vector<cplx> ph;
        for (std::size_t m = 0; m < lags; ++m) {
            lm.phases(static_cast<std::int64_t>(m), ph);
            double acc = 0.0;
            for (int b = 0; b < lm.antennas(); ++b) acc += lm.rx_diagonal(b, ph);
            r[m] = acc / lm.antennas();
        }
        if (component == PsdComponent::total) r[0] += model.effective_noise() / 2.0;
        return r;
    });
    std::vector<double> mean(lags, 0.0);
    for (const auto& r : parts)
        for (std::size_t m = 0; m < lags; ++m) mean[m] += r[m];
    for (double& v : mean) v /= static_cast<double>(parts.size());
    return mean;
}

/// Half-width of the in-band window around f_c used for PSD summaries.
inline constexpr double kInbandHalfWidthHz = 11e6;

/// `psd`: Welch estimate of the ADC output next to the closed form, for the
/// first B, quantizer and dither mode at every configured SNR.
inline RunReport run_psd(const ExperimentConfig& cfg, const RunOptions& opt = {})
{
    cfg.validate();
    RunReport report;
    report.command = "psd";
    report.config = cfg;
    const int b = cfg.antennas.front();
    const Quantizer q = cfg.quantizers.front();
    const DitherMode mode = cfg.dither_modes.front();
    const ChannelSet channels = ChannelSet::draw(cfg, b, channels_needed(cfg), opt.threads);
    const auto seg = static_cast<std::size_t>(cfg.psd_segment_len);
    const LagWindow window = LagWindow::welch_hann(seg);
    for (double snr : cfg.snr_db) {
        const auto t0 = std::chrono::steady_clock::now();
        const DitherSpec d = detail::resolve_dither(cfg, channels, snr, q, mode, opt, report);
        PsdTable t;
        t.antennas = b;
        t.snr_db = snr;
        t.quantizer = q;
        t.dither = mode;
        t.d0 = d.power;
        t.band_lo_hz = cfg.carrier_hz - kInbandHalfWidthHz;
        t.band_hi_hz = cfg.carrier_hz + kInbandHalfWidthHz;

        PointSpec spec;
        spec.snr_db = snr;
        spec.quantizer = q;
        spec.dither = d;
        spec.n_channels = cfg.n_channels;
        spec.n_symbols = cfg.n_symbols;
        spec.collect_psd = true;
        const PsdEstimate emp = simulate_point(cfg, channels, spec, opt).psd->estimate();
        t.freq_hz = emp.freq_hz;
        t.peak_freq_empirical_hz = emp.freq_hz[emp.peak_index()];

        std::optional<PsdEstimate> ana;
        if (cfg.analytical && analytical_supported(q, d.mode)) {
            const SignalModel model = cfg.signal_model(snr, d);
            const auto psd_of = [&](PsdComponent comp) {
                const auto r = mean_output_autocov(cfg, channels, model, q, comp, seg, opt);
                return psd_from_autocov(r, window, cfg.sample_rate_hz);
            };
            ana = psd_of(PsdComponent::total);
            t.peak_freq_analytical_hz = ana->freq_hz[ana->peak_index()];
            if (q == Quantizer::one_bit) {
                const double sig = psd_of(PsdComponent::signal).band_mean(t.band_lo_hz, t.band_hi_hz);
                const double dis = psd_of(PsdComponent::distortion).band_mean(t.band_lo_hz, t.band_hi_hz);
                t.inband_distortion_to_signal_db = linear_to_db(std::max(dis, 1e-300) / sig);
            }
        }
        t.reference_density = ana ? ana->density[ana->peak_index()] : emp.density[emp.peak_index()];
        t.empirical_db = emp.db(t.reference_density);
        t.inband_empirical_db = linear_to_db(emp.band_mean(t.band_lo_hz, t.band_hi_hz) / t.reference_density);
        if (ana) {
            t.analytical_db = ana->db(t.reference_density);
            t.inband_analytical_db = linear_to_db(ana->band_mean(t.band_lo_hz, t.band_hi_hz) / t.reference_density);
        }
        if (opt.log)
            *opt.log << "psd snr=" << detail::num(snr) << " peak=" << detail::format("%.4g", t.peak_freq_empirical_hz)
                     << " Hz (" << detail::format("%.2f", detail::seconds_since(t0)) << " s)\n";
        report.psd.push_back(std::move(t));
    }
    return report;
}

} // namespace rfmimo::harness
