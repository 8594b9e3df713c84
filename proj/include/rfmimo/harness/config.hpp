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
#include "rfmimo/quantizer.hpp"
#include "rfmimo/system.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace rfmimo::harness {

/// Named EVM requirement line (e.g. "64QAM" -> 8.0 percent).
struct ThresholdLine {
    std::string label;
    double percent = 0.0;
};

/// Every scalar of an experiment. Defaults reproduce the reference setup:
/// B = 32, U = 4, N = 4096, nine subcarriers around DC, L = 1000 taps,
/// f_s = 10 GS/s, f_c = 2.4 GHz, 16-QAM, 25 channels x 25 symbols.
struct ExperimentConfig {
    std::vector<int> antennas{32};       // B (list for sweeps)
    int users = 4;                       // U
    int samples = 4096;                  // N
    std::vector<int> occupied{0, 1, 2, 3, 4, 4092, 4093, 4094, 4095};
    int taps = 1000;                     // L
    double carrier_hz = 2.4e9;           // f_c
    double sample_rate_hz = 10e9;        // f_s
    double symbol_energy = 1.0;          // E_s
    std::vector<double> snr_db{10.0};
    int qam_order = 16;
    std::vector<Quantizer> quantizers{Quantizer::one_bit};
    std::vector<DitherMode> dither_modes{DitherMode::none};
    double dither_power = 0.0;           // D_0 when not optimized
    bool optimize_dither = false;
    int n_channels = 25;
    int n_symbols = 25;
    std::uint64_t master_seed = 1;
    std::vector<ThresholdLine> evm_thresholds;
    int psd_segment_len = 4096;
    bool analytical = true;
    bool empirical = true;               // Monte Carlo columns in sweeps
    DistortionLagSum lag_sum = DistortionLagSum::one_sided;
    int max_lags = 0;
    int opt_channels = 5;
    int opt_symbols = 5;
    int opt_grid_points = 25;

    OfdmLayout layout() const { return OfdmLayout::make(samples, occupied); }
    RfParams rf() const { return {carrier_hz, sample_rate_hz}; }

    double noise_power(double snr) const { return symbol_energy / db_to_linear(snr); }

    SignalModel signal_model(double snr, DitherSpec dither = {}) const
    {
        SignalModel m;
        m.layout = layout();
        m.rf = rf();
        m.symbol_energy = symbol_energy;
        m.noise_power = noise_power(snr);
        m.dither = dither;
        return m;
    }

    AnalyticalOptions analytical_options() const { return {lag_sum, max_lags}; }

    double bandwidth_hz() const { return static_cast<double>(occupied.size()) / samples * sample_rate_hz; }
    double oversampling_rate() const { return static_cast<double>(samples) / static_cast<double>(occupied.size()); }
    double delay_spread_s() const { return taps / sample_rate_hz; }

    /// Throws InvalidArgument describing the first violated constraint.
    void validate() const
    {
        require(!antennas.empty(), "B must list at least one antenna count");
        require(users >= 1, "U must be >= 1");
        for (int b : antennas) require(b >= users, "B must be >= U (got B = " + std::to_string(b) + ")");
        require(samples >= 1, "N must be >= 1");
        require(taps >= 1, "L must be >= 1");
        require(samples >= taps, "N must be >= L");
        layout();
        rf().validate();
        require(symbol_energy > 0.0 && std::isfinite(symbol_energy), "E_s must be positive");
        require(!snr_db.empty(), "snr_db must be nonempty");
        for (double s : snr_db) require(std::isfinite(s), "snr_db values must be finite");
        QamConstellation(qam_order, symbol_energy);
        require(!quantizers.empty(), "quantizer must be nonempty");
        require(!dither_modes.empty(), "dither must be nonempty");
        require(dither_power >= 0.0 && std::isfinite(dither_power), "D_0 must be finite and >= 0");
        require(n_channels >= 1 && n_symbols >= 1, "n_channels and n_symbols must be >= 1");
        require(psd_segment_len >= 2 && psd_segment_len <= samples && std::has_single_bit(static_cast<unsigned>(psd_segment_len)),
                "psd_segment_len must be a power of two <= N");
        require(max_lags >= 0 && max_lags <= samples, "max_lags must lie in [0, N]");
        require(opt_channels >= 1 && opt_symbols >= 1 && opt_grid_points >= 2, "optimizer trial counts must be positive");
        for (const auto& t : evm_thresholds)
            require(t.percent > 0.0 && std::isfinite(t.percent), "EVM threshold '" + t.label + "' must be positive");
    }
};

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double parse_double(const std::string& key, const std::string& v)
{
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw InvalidArgument("config key '" + key + "': '" + v + "' is not a number");
    }
}

inline long long parse_integer(const std::string& key, const std::string& v)
{
    try {
        std::size_t used = 0;
        const long long i = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw InvalidArgument("config key '" + key + "': '" + v + "' is not an integer");
    }
}

inline int parse_int(const std::string& key, const std::string& v)
{
    const long long i = parse_integer(key, v);
    if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max())
        throw InvalidArgument("config key '" + key + "': value out of range");
    return static_cast<int>(i);
}

inline bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw InvalidArgument("config key '" + key + "': '" + v + "' is not a boolean");
}

/// "a, b, c" or "start:step:stop" (inclusive) or a mix of both.
inline std::vector<double> parse_grid(const std::string& key, const std::string& v)
{
    std::vector<double> out;
    for (const std::string& part : split(v, ',')) {
        const auto pieces = split(part, ':');
        if (pieces.size() == 1) {
            out.push_back(parse_double(key, pieces[0]));
        } else if (pieces.size() == 3) {
            const double start = parse_double(key, pieces[0]);
            const double step = parse_double(key, pieces[1]);
            const double stop = parse_double(key, pieces[2]);
            if (!(step > 0.0) || stop < start) throw InvalidArgument("config key '" + key + "': bad range '" + part + "'");
            const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;
            if (count > 100000) throw InvalidArgument("config key '" + key + "': range too long");
            for (long long i = 0; i < count; ++i) out.push_back(start + static_cast<double>(i) * step);
        } else {
            throw InvalidArgument("config key '" + key + "': cannot parse '" + part + "'");
        }
    }
    if (out.empty()) throw InvalidArgument("config key '" + key + "': empty list");
    return out;
}

} // namespace detail

/// Applies one `key = value` assignment.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value)
{
    using namespace detail;
    if (key == "B") {
        cfg.antennas.clear();
        for (const auto& s : split(value, ',')) cfg.antennas.push_back(parse_int(key, s));
        require(!cfg.antennas.empty(), "config key 'B': empty list");
    } else if (key == "U") {
        cfg.users = parse_int(key, value);
    } else if (key == "N") {
        cfg.samples = parse_int(key, value);
    } else if (key == "occupied_set") {
        cfg.occupied.clear();
        for (const auto& s : split(value, ',')) cfg.occupied.push_back(parse_int(key, s));
        std::sort(cfg.occupied.begin(), cfg.occupied.end());
    } else if (key == "L") {
        cfg.taps = parse_int(key, value);
    } else if (key == "f_c") {
        cfg.carrier_hz = parse_double(key, value);
    } else if (key == "f_s") {
        cfg.sample_rate_hz = parse_double(key, value);
    } else if (key == "E_s") {
        cfg.symbol_energy = parse_double(key, value);
    } else if (key == "snr_db") {
        cfg.snr_db = parse_grid(key, value);
    } else if (key == "qam_order") {
        cfg.qam_order = parse_int(key, value);
    } else if (key == "quantizer") {
        cfg.quantizers.clear();
        for (const auto& s : split(value, ',')) cfg.quantizers.push_back(parse_quantizer(s));
    } else if (key == "dither") {
        cfg.dither_modes.clear();
        for (const auto& s : split(value, ',')) cfg.dither_modes.push_back(parse_dither_mode(s));
    } else if (key == "D_0") {
        if (value == "optimize") {
            cfg.optimize_dither = true;
        } else {
            cfg.optimize_dither = false;
            cfg.dither_power = parse_double(key, value);
        }
    } else if (key == "n_channels") {
        cfg.n_channels = parse_int(key, value);
    } else if (key == "n_symbols") {
        cfg.n_symbols = parse_int(key, value);
    } else if (key == "master_seed") {
        const long long v = parse_integer(key, value);
        require(v >= 0, "config key 'master_seed' must be >= 0");
        cfg.master_seed = static_cast<std::uint64_t>(v);
    } else if (key.rfind("evm_threshold.", 0) == 0) {
        const std::string label = key.substr(std::string("evm_threshold.").size());
        require(!label.empty(), "evm_threshold needs a label, e.g. evm_threshold.64QAM");
        cfg.evm_thresholds.push_back({label, parse_double(key, value)});
    } else if (key == "psd_segment_len") {
        cfg.psd_segment_len = parse_int(key, value);
    } else if (key == "analytical") {
        cfg.analytical = parse_bool(key, value);
    } else if (key == "empirical") {
        cfg.empirical = parse_bool(key, value);
    } else if (key == "lag_sum") {
        cfg.lag_sum = parse_lag_sum(value);
    } else if (key == "max_lags") {
        cfg.max_lags = parse_int(key, value);
    } else if (key == "opt_channels") {
        cfg.opt_channels = parse_int(key, value);
    } else if (key == "opt_symbols") {
        cfg.opt_symbols = parse_int(key, value);
    } else if (key == "opt_grid_points") {
        cfg.opt_grid_points = parse_int(key, value);
    } else {
        throw InvalidArgument("unknown config key '" + key + "'");
    }
}

/// Parses `key = value` lines; '#' starts a comment. Later keys override
/// earlier ones, except evm_threshold.* which accumulate.
inline ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {})
{
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw InvalidArgument("config line " + std::to_string(lineno) + ": empty key or value");
        try {
            apply_setting(base, key, value);
        } catch (const InvalidArgument& e) {
            throw InvalidArgument("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    base.validate();
    return base;
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

} // namespace rfmimo::harness
