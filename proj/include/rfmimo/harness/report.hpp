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
#include "rfmimo/harness/config.hpp"
#include "rfmimo/rxchain.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rfmimo::harness {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Report contents
// ---------------------------------------------------------------------------

struct EvmRow {
    int antennas = 0;
    int users = 0;
    double snr_db = 0.0;
    Quantizer quantizer = Quantizer::one_bit;
    DitherMode dither = DitherMode::none;
    double d0 = 0.0;
    std::optional<double> evm_empirical_pct;
    std::optional<double> evm_analytical_pct;
    double ci_halfwidth_pct = 0.0;
    int n_channels = 0;
    int n_symbols = 0;
    std::uint64_t seed = 0;
    double wall_time_s = 0.0; // console only; kept out of the files so they stay reproducible
};

/// SNR interval around the curve minimum where EVM stays below a threshold.
/// An absent endpoint means the curve is still below the line at the grid edge.
struct ThresholdCrossing {
    int antennas = 0;
    Quantizer quantizer = Quantizer::one_bit;
    DitherMode dither = DitherMode::none;
    std::string label;
    double percent = 0.0;
    std::string source; // "analytical" or "empirical"
    double min_evm_pct = 0.0;
    double snr_at_min_db = 0.0;
    bool supported = false;
    std::optional<double> low_db;
    std::optional<double> high_db;
};

struct DitherOptimization {
    int antennas = 0;
    double snr_db = 0.0;
    Quantizer quantizer = Quantizer::one_bit;
    DitherMode mode = DitherMode::none;
    double d0 = 0.0;
    double evm_pct = 0.0;
    double evm_undithered_pct = 0.0;
    std::string method; // "golden_section" or "grid"
    bool fallback_used = false;
    std::vector<std::pair<double, double>> evaluations; // (D_0, EVM%)
};

struct PsdTable {
    int antennas = 0;
    double snr_db = 0.0;
    Quantizer quantizer = Quantizer::one_bit;
    DitherMode dither = DitherMode::none;
    double d0 = 0.0;
    std::vector<double> freq_hz;
    std::vector<double> empirical_db;  // relative to the reference density
    std::vector<double> analytical_db; // empty when no closed form applies
    double reference_density = 1.0;   // linear density mapped to 0 dB
    double peak_freq_empirical_hz = 0.0;
    double peak_freq_analytical_hz = 0.0;
    std::optional<double> inband_empirical_db;
    std::optional<double> inband_analytical_db;
    std::optional<double> inband_distortion_to_signal_db;
    double band_lo_hz = 0.0;
    double band_hi_hz = 0.0;
};

struct ConstellationSet {
    Quantizer quantizer = Quantizer::one_bit;
    DitherMode dither = DitherMode::none;
    double d0 = 0.0;
    std::vector<ConstellationPoint> points;
};

struct ValidationCheck {
    std::string name;
    double value = 0.0;     // observed error (relative or absolute, see `metric`)
    double tolerance = 0.0;
    std::string metric;
    bool passed = false;
    std::string detail;
};

struct RunReport {
    std::string command;
    ExperimentConfig config;
    std::vector<EvmRow> rows;
    std::vector<ThresholdCrossing> crossings;
    std::vector<DitherOptimization> dither;
    std::vector<PsdTable> psd;
    std::vector<ConstellationSet> constellations;
    std::vector<ValidationCheck> validation;
    std::vector<std::string> warnings;
    std::vector<std::string> artifacts;
};

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

namespace detail {

template <class... Args>
std::string format(const char* fmt, Args... args)
{
    const int n = std::snprintf(nullptr, 0, fmt, args...);
    std::string out(static_cast<std::size_t>(n), '\0');
    std::snprintf(out.data(), out.size() + 1, fmt, args...);
    return out;
}

/// Shortest text that reads back as the same double.
inline std::string num(double v)
{
    for (int prec = 6; prec <= 17; ++prec) {
        std::string s = format("%.*g", prec, v);
        if (std::stod(s) == v) return s;
    }
    return format("%.17g", v);
}

inline std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

inline Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline std::string dither_tag(DitherMode d)
{
    return d == DitherMode::none ? "none" : d == DitherMode::gaussian ? "gaussian" : "binary";
}

} // namespace detail

inline std::string evm_csv(const std::vector<EvmRow>& rows)
{
    using detail::num;
    std::string out = "B,U,snr_db,quantizer,dither_mode,d0,evm_empirical_pct,evm_analytical_pct,ci_halfwidth_pct,"
                      "n_channels,n_symbols,seed\n";
    for (const EvmRow& r : rows) {
        out += std::to_string(r.antennas) + ',' + std::to_string(r.users) + ',' + num(r.snr_db) + ',' +
               to_string(r.quantizer) + ',' + to_string(r.dither) + ',' + num(r.d0) + ',' +
               detail::opt_num(r.evm_empirical_pct) + ',' + detail::opt_num(r.evm_analytical_pct) + ',' +
               num(r.ci_halfwidth_pct) + ',' + std::to_string(r.n_channels) + ',' + std::to_string(r.n_symbols) + ',' +
               std::to_string(r.seed) + '\n';
    }
    return out;
}

inline std::string psd_csv(const PsdTable& t)
{
    std::string out = "freq_hz,psd_db_empirical,psd_db_analytical\n";
    for (std::size_t i = 0; i < t.freq_hz.size(); ++i) {
        out += detail::num(t.freq_hz[i]) + ',' + detail::format("%.6f", t.empirical_db[i]) + ',';
        if (!t.analytical_db.empty()) out += detail::format("%.6f", t.analytical_db[i]);
        out += '\n';
    }
    return out;
}

inline std::string constellation_csv(const std::vector<ConstellationPoint>& points)
{
    std::string out = "trial,symbol,subcarrier,user,re,im\n";
    for (const ConstellationPoint& p : points)
        out += detail::format("%d,%d,%d,%d,%.9e,%.9e\n", p.trial, p.symbol, p.subcarrier, p.user, p.value.real(),
                              p.value.imag());
    return out;
}

inline std::string thresholds_csv(const std::vector<ThresholdCrossing>& crossings)
{
    std::string out = "B,quantizer,dither_mode,label,threshold_pct,source,min_evm_pct,snr_at_min_db,supported,"
                      "snr_low_db,snr_high_db\n";
    for (const ThresholdCrossing& c : crossings)
        out += std::to_string(c.antennas) + ',' + to_string(c.quantizer) + ',' + to_string(c.dither) + ',' + c.label +
               ',' + detail::num(c.percent) + ',' + c.source + ',' + detail::format("%.6f", c.min_evm_pct) + ',' +
               detail::num(c.snr_at_min_db) + ',' + (c.supported ? "true" : "false") + ',' +
               (c.low_db ? detail::format("%.4f", *c.low_db) : "") + ',' +
               (c.high_db ? detail::format("%.4f", *c.high_db) : "") + '\n';
    return out;
}

inline std::string dither_csv(const std::vector<DitherOptimization>& opts)
{
    std::string out = "B,snr_db,quantizer,dither_mode,d0,evm_pct,evm_undithered_pct,method,fallback\n";
    for (const DitherOptimization& o : opts)
        out += std::to_string(o.antennas) + ',' + detail::num(o.snr_db) + ',' + to_string(o.quantizer) + ',' +
               to_string(o.mode) + ',' + detail::num(o.d0) + ',' + detail::format("%.6f", o.evm_pct) + ',' +
               detail::format("%.6f", o.evm_undithered_pct) + ',' + o.method + ',' +
               (o.fallback_used ? "true" : "false") + '\n';
    return out;
}

inline std::string validation_csv(const std::vector<ValidationCheck>& checks)
{
    std::string out = "check,metric,value,tolerance,passed\n";
    for (const ValidationCheck& c : checks)
        out += c.name + ',' + c.metric + ',' + detail::format("%.6e", c.value) + ',' +
               detail::format("%.6e", c.tolerance) + ',' + (c.passed ? "true" : "false") + '\n';
    return out;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline Json config_to_json(const ExperimentConfig& c)
{
    Json j;
    j["B"] = c.antennas;
    j["U"] = c.users;
    j["N"] = c.samples;
    j["occupied_set"] = c.occupied;
    j["L"] = c.taps;
    j["f_c"] = c.carrier_hz;
    j["f_s"] = c.sample_rate_hz;
    j["E_s"] = c.symbol_energy;
    j["snr_db"] = c.snr_db;
    j["qam_order"] = c.qam_order;
    Json q = Json::array();
    for (Quantizer x : c.quantizers) q.push_back(to_string(x));
    j["quantizer"] = q;
    Json d = Json::array();
    for (DitherMode x : c.dither_modes) d.push_back(to_string(x));
    j["dither"] = d;
    j["D_0"] = c.optimize_dither ? Json("optimize") : Json(c.dither_power);
    j["n_channels"] = c.n_channels;
    j["n_symbols"] = c.n_symbols;
    j["master_seed"] = c.master_seed;
    Json t = Json::object();
    for (const auto& line : c.evm_thresholds) t[line.label] = line.percent;
    j["evm_threshold"] = t;
    j["psd_segment_len"] = c.psd_segment_len;
    j["analytical"] = c.analytical;
    j["empirical"] = c.empirical;
    j["lag_sum"] = to_string(c.lag_sum);
    j["max_lags"] = c.max_lags;
    j["opt_channels"] = c.opt_channels;
    j["opt_symbols"] = c.opt_symbols;
    j["opt_grid_points"] = c.opt_grid_points;
    j["derived"] = {{"bandwidth_hz", c.bandwidth_hz()},
                    {"oversampling_rate", c.oversampling_rate()},
                    {"delay_spread_s", c.delay_spread_s()}};
    return j;
}

inline Json report_to_json(const RunReport& r)
{
    Json j;
    j["schema"] = "rfmimo.report/1";
    j["command"] = r.command;
    j["config"] = config_to_json(r.config);
    Json rows = Json::array();
    for (const EvmRow& e : r.rows)
        rows.push_back({{"B", e.antennas},
                        {"U", e.users},
                        {"snr_db", e.snr_db},
                        {"quantizer", to_string(e.quantizer)},
                        {"dither_mode", to_string(e.dither)},
                        {"d0", e.d0},
                        {"evm_empirical_pct", detail::opt_json(e.evm_empirical_pct)},
                        {"evm_analytical_pct", detail::opt_json(e.evm_analytical_pct)},
                        {"ci_halfwidth_pct", e.ci_halfwidth_pct},
                        {"n_channels", e.n_channels},
                        {"n_symbols", e.n_symbols},
                        {"seed", e.seed}});
    j["rows"] = rows;
    Json cr = Json::array();
    for (const ThresholdCrossing& c : r.crossings)
        cr.push_back({{"B", c.antennas},
                      {"quantizer", to_string(c.quantizer)},
                      {"dither_mode", to_string(c.dither)},
                      {"label", c.label},
                      {"threshold_pct", c.percent},
                      {"source", c.source},
                      {"min_evm_pct", c.min_evm_pct},
                      {"snr_at_min_db", c.snr_at_min_db},
                      {"supported", c.supported},
                      {"snr_low_db", detail::opt_json(c.low_db)},
                      {"snr_high_db", detail::opt_json(c.high_db)}});
    j["threshold_crossings"] = cr;
    Json dj = Json::array();
    for (const DitherOptimization& o : r.dither) {
        Json ev = Json::array();
        for (const auto& [d0, e] : o.evaluations) ev.push_back({d0, e});
        dj.push_back({{"B", o.antennas},
                      {"snr_db", o.snr_db},
                      {"quantizer", to_string(o.quantizer)},
                      {"dither_mode", to_string(o.mode)},
                      {"d0", o.d0},
                      {"evm_pct", o.evm_pct},
                      {"evm_undithered_pct", o.evm_undithered_pct},
                      {"method", o.method},
                      {"fallback", o.fallback_used},
                      {"evaluations", ev}});
    }
    j["dither_optimization"] = dj;
    Json pj = Json::array();
    for (const PsdTable& t : r.psd)
        pj.push_back({{"B", t.antennas},
                      {"snr_db", t.snr_db},
                      {"quantizer", to_string(t.quantizer)},
                      {"dither_mode", to_string(t.dither)},
                      {"d0", t.d0},
                      {"reference_density", t.reference_density},
                      {"peak_freq_empirical_hz", t.peak_freq_empirical_hz},
                      {"peak_freq_analytical_hz", t.peak_freq_analytical_hz},
                      {"band_hz", {t.band_lo_hz, t.band_hi_hz}},
                      {"inband_empirical_db", detail::opt_json(t.inband_empirical_db)},
                      {"inband_analytical_db", detail::opt_json(t.inband_analytical_db)},
                      {"inband_distortion_to_signal_db", detail::opt_json(t.inband_distortion_to_signal_db)},
                      {"freq_hz", t.freq_hz},
                      {"psd_db_empirical", t.empirical_db},
                      {"psd_db_analytical", t.analytical_db}});
    j["psd"] = pj;
    Json cj = Json::array();
    for (const ConstellationSet& c : r.constellations) {
        Json pts = Json::array();
        for (const ConstellationPoint& p : c.points)
            pts.push_back({p.trial, p.symbol, p.subcarrier, p.user, p.value.real(), p.value.imag()});
        cj.push_back({{"quantizer", to_string(c.quantizer)},
                      {"dither_mode", to_string(c.dither)},
                      {"d0", c.d0},
                      {"columns", {"trial", "symbol", "subcarrier", "user", "re", "im"}},
                      {"points", pts}});
    }
    j["constellations"] = cj;
    Json vj = Json::array();
    for (const ValidationCheck& v : r.validation)
        vj.push_back({{"check", v.name},
                      {"metric", v.metric},
                      {"value", v.value},
                      {"tolerance", v.tolerance},
                      {"passed", v.passed},
                      {"detail", v.detail}});
    j["validation"] = vj;
    j["warnings"] = r.warnings;
    j["artifacts"] = r.artifacts;
    return j;
}

namespace detail {

inline void expect(bool cond, const std::string& what)
{
    if (!cond) throw InvalidArgument("report schema: " + what);
}

inline void expect_fields(const Json& obj, const std::string& where,
                          std::initializer_list<std::pair<const char*, Json::value_t>> fields)
{
    expect(obj.is_object(), where + " must be an object");
    for (const auto& [name, type] : fields) {
        expect(obj.contains(name), where + " lacks '" + name + "'");
        const Json& v = obj.at(name);
        const bool ok = type == Json::value_t::number_float ? v.is_number()
                        : type == Json::value_t::discarded  ? (v.is_number() || v.is_null())
                                                            : v.type() == type ||
                                                                  (type == Json::value_t::number_integer &&
                                                                   v.is_number_integer());
        expect(ok, where + "." + name + " has the wrong type");
    }
}

} // namespace detail

/// Structural check of a report document; throws InvalidArgument naming the
/// first violation. `discarded` in the field tables stands for "number or null".
inline void validate_report_json(const Json& j)
{
    using VT = Json::value_t;
    using detail::expect;
    using detail::expect_fields;
    expect_fields(j, "report",
                  {{"schema", VT::string}, {"command", VT::string}, {"config", VT::object}, {"rows", VT::array},
                   {"threshold_crossings", VT::array}, {"dither_optimization", VT::array}, {"psd", VT::array},
                   {"constellations", VT::array}, {"validation", VT::array}, {"warnings", VT::array},
                   {"artifacts", VT::array}});
    expect(j.at("schema") == "rfmimo.report/1", "unknown schema tag");
    expect_fields(j.at("config"), "config",
                  {{"B", VT::array}, {"U", VT::number_integer}, {"N", VT::number_integer},
                   {"occupied_set", VT::array}, {"L", VT::number_integer}, {"f_c", VT::number_float},
                   {"f_s", VT::number_float}, {"E_s", VT::number_float}, {"snr_db", VT::array},
                   {"n_channels", VT::number_integer}, {"n_symbols", VT::number_integer},
                   {"master_seed", VT::number_integer}, {"derived", VT::object}});
    for (const Json& r : j.at("rows")) {
        expect_fields(r, "row",
                      {{"B", VT::number_integer}, {"U", VT::number_integer}, {"snr_db", VT::number_float},
                       {"quantizer", VT::string}, {"dither_mode", VT::string}, {"d0", VT::number_float},
                       {"evm_empirical_pct", VT::discarded}, {"evm_analytical_pct", VT::discarded},
                       {"ci_halfwidth_pct", VT::number_float}, {"n_channels", VT::number_integer},
                       {"n_symbols", VT::number_integer}, {"seed", VT::number_integer}});
        parse_quantizer(r.at("quantizer").get<std::string>());
        parse_dither_mode(r.at("dither_mode").get<std::string>());
    }
    for (const Json& c : j.at("threshold_crossings"))
        expect_fields(c, "threshold_crossing",
                      {{"B", VT::number_integer}, {"label", VT::string}, {"threshold_pct", VT::number_float},
                       {"supported", VT::boolean}, {"snr_low_db", VT::discarded}, {"snr_high_db", VT::discarded}});
    for (const Json& o : j.at("dither_optimization"))
        expect_fields(o, "dither_optimization",
                      {{"snr_db", VT::number_float}, {"dither_mode", VT::string}, {"d0", VT::number_float},
                       {"evm_pct", VT::number_float}, {"method", VT::string}, {"evaluations", VT::array}});
    for (const Json& p : j.at("psd")) {
        expect_fields(p, "psd",
                      {{"snr_db", VT::number_float}, {"freq_hz", VT::array}, {"psd_db_empirical", VT::array},
                       {"psd_db_analytical", VT::array}});
        const std::size_t n = p.at("freq_hz").size();
        expect(p.at("psd_db_empirical").size() == n, "psd empirical column length differs from freq_hz");
        expect(p.at("psd_db_analytical").empty() || p.at("psd_db_analytical").size() == n,
               "psd analytical column length differs from freq_hz");
    }
    for (const Json& c : j.at("constellations")) {
        expect_fields(c, "constellation", {{"quantizer", VT::string}, {"points", VT::array}});
        for (const Json& pt : c.at("points")) expect(pt.is_array() && pt.size() == 6, "constellation point needs 6 values");
    }
    for (const Json& v : j.at("validation"))
        expect_fields(v, "validation", {{"check", VT::string}, {"value", VT::number_float}, {"passed", VT::boolean}});
}

/// EVM rows back from a report document.
inline std::vector<EvmRow> evm_rows_from_json(const Json& j)
{
    validate_report_json(j);
    std::vector<EvmRow> out;
    for (const Json& r : j.at("rows")) {
        EvmRow e;
        e.antennas = r.at("B").get<int>();
        e.users = r.at("U").get<int>();
        e.snr_db = r.at("snr_db").get<double>();
        e.quantizer = parse_quantizer(r.at("quantizer").get<std::string>());
        e.dither = parse_dither_mode(r.at("dither_mode").get<std::string>());
        e.d0 = r.at("d0").get<double>();
        if (!r.at("evm_empirical_pct").is_null()) e.evm_empirical_pct = r.at("evm_empirical_pct").get<double>();
        if (!r.at("evm_analytical_pct").is_null()) e.evm_analytical_pct = r.at("evm_analytical_pct").get<double>();
        e.ci_halfwidth_pct = r.at("ci_halfwidth_pct").get<double>();
        e.n_channels = r.at("n_channels").get<int>();
        e.n_symbols = r.at("n_symbols").get<int>();
        e.seed = r.at("seed").get<std::uint64_t>();
        out.push_back(e);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Channel fixtures
// ---------------------------------------------------------------------------

/// {"B", "U", "L", "re", "im"} with entries ordered tap, column, row.
inline Json channel_to_json(const ChannelRealization& ch)
{
    std::vector<double> re, im;
    for (const ComplexGrid& t : ch.taps())
        for (Eigen::Index u = 0; u < t.cols(); ++u)
            for (Eigen::Index b = 0; b < t.rows(); ++b) {
                re.push_back(t(b, u).real());
                im.push_back(t(b, u).imag());
            }
    Json j;
    j["schema"] = "rfmimo.channel/1";
    j["B"] = ch.antennas();
    j["U"] = ch.users();
    j["L"] = ch.tap_count();
    j["re"] = re;
    j["im"] = im;
    return j;
}

inline ChannelRealization channel_from_json(const Json& j)
{
    detail::expect(j.is_object() && j.value("schema", "") == "rfmimo.channel/1", "not a channel document");
    const int b_count = j.at("B").get<int>();
    const int u_count = j.at("U").get<int>();
    const int l_count = j.at("L").get<int>();
    const auto re = j.at("re").get<std::vector<double>>();
    const auto im = j.at("im").get<std::vector<double>>();
    const auto expected = static_cast<std::size_t>(b_count) * static_cast<std::size_t>(u_count) *
                          static_cast<std::size_t>(l_count);
    detail::expect(b_count >= 1 && u_count >= 1 && l_count >= 1, "channel dimensions must be positive");
    detail::expect(re.size() == expected && im.size() == expected, "channel entry count mismatch");
    std::vector<ComplexGrid> taps;
    std::size_t i = 0;
    for (int l = 0; l < l_count; ++l) {
        ComplexGrid t(b_count, u_count);
        for (int u = 0; u < u_count; ++u)
            for (int b = 0; b < b_count; ++b, ++i) t(b, u) = {re[i], im[i]};
        taps.push_back(std::move(t));
    }
    return ChannelRealization(std::move(taps));
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

/// Writes `content` to `path` through a sibling temp file and a rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open '" + tmp.string() + "' for writing");
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        f.flush();
        if (!f) throw IoError("write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "'");
    }
}

enum class OutputFormat { csv, json };

inline OutputFormat parse_output_format(const std::string& s)
{
    if (s == "csv") return OutputFormat::csv;
    if (s == "json") return OutputFormat::json;
    throw InvalidArgument("unknown output format '" + s + "'");
}

/// Writes the report into `dir`. CSV format writes one table per artifact
/// plus report.json; JSON format writes report.json only. Returns the file
/// names written, report.json last.
inline std::vector<std::string> emit_results(RunReport report, const std::filesystem::path& dir, OutputFormat format)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");

    std::vector<std::pair<std::string, std::string>> files;
    if (format == OutputFormat::csv) {
        if (!report.rows.empty()) files.emplace_back("evm.csv", evm_csv(report.rows));
        if (!report.crossings.empty()) files.emplace_back("thresholds.csv", thresholds_csv(report.crossings));
        if (!report.dither.empty()) files.emplace_back("dither.csv", dither_csv(report.dither));
        for (const PsdTable& t : report.psd)
            files.emplace_back("psd_B" + std::to_string(t.antennas) + "_" + to_string(t.quantizer) + "_" +
                                   detail::dither_tag(t.dither) + "_snr" + detail::num(t.snr_db) + ".csv",
                               psd_csv(t));
        for (const ConstellationSet& c : report.constellations)
            files.emplace_back("constellation_" + to_string(c.quantizer) + "_" + detail::dither_tag(c.dither) + ".csv",
                               constellation_csv(c.points));
        if (!report.validation.empty()) files.emplace_back("validation.csv", validation_csv(report.validation));
    }
    report.artifacts.clear();
    for (const auto& f : files) report.artifacts.push_back(f.first);
    report.artifacts.push_back("report.json");
    const Json j = report_to_json(report);
    validate_report_json(j);
    files.emplace_back("report.json", j.dump(2) + "\n");
    for (const auto& [name, content] : files) write_file_atomic(dir / name, content);
    return report.artifacts;
}

} // namespace rfmimo::harness
