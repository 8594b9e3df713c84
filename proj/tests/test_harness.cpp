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


#include "rfmimo/harness/experiment.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rfmimo;
using namespace rfmimo::harness;

namespace {

/// Small but complete configuration that runs in well under a second.
ExperimentConfig tiny()
{
    return parse_config(R"(
B = 8
U = 2
N = 256
occupied_set = 254, 255, 0, 1, 2
L = 16
snr_db = 10
n_channels = 2
n_symbols = 3
psd_segment_len = 256
)");
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& name)
{
    const auto p = std::filesystem::temp_directory_path() / ("rfmimo_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

} // namespace

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

TEST(Config, DefaultsEchoBandwidthAndOversampling)
{
    const ExperimentConfig c;
    c.validate();
    EXPECT_NEAR(c.bandwidth_hz(), 21.97e6, 0.01e6);
    EXPECT_NEAR(c.oversampling_rate(), 455.1, 0.1);
    EXPECT_EQ(c.occupied, (std::vector<int>{0, 1, 2, 3, 4, 4092, 4093, 4094, 4095}));
}

TEST(Config, ParsesKeysGridsAndComments)
{
    const ExperimentConfig c = parse_config(R"(
# comment line
B = 16, 32, 64      # trailing comment
snr_db = -10:1:50
quantizer = one_bit, infinite
dither = none, gaussian
D_0 = optimize
evm_threshold.64QAM = 8
evm_threshold.16QAM = 12.5
master_seed = 99
)");
    EXPECT_EQ(c.antennas, (std::vector<int>{16, 32, 64}));
    ASSERT_EQ(c.snr_db.size(), 61u);
    EXPECT_DOUBLE_EQ(c.snr_db.front(), -10.0);
    EXPECT_DOUBLE_EQ(c.snr_db.back(), 50.0);
    EXPECT_EQ(c.quantizers.size(), 2u);
    EXPECT_TRUE(c.optimize_dither);
    ASSERT_EQ(c.evm_thresholds.size(), 2u);
    EXPECT_EQ(c.evm_thresholds[1].label, "16QAM");
    EXPECT_EQ(c.master_seed, 99u);
}

TEST(Config, RejectsInvalidValues)
{
    EXPECT_THROW(parse_config("bogus = 1"), InvalidArgument);
    EXPECT_THROW(parse_config("U = four"), InvalidArgument);
    EXPECT_THROW(parse_config("f_c = 6e9"), InvalidArgument);          // above f_s/2
    EXPECT_THROW(parse_config("N = 512"), InvalidArgument);            // N < L
    EXPECT_THROW(parse_config("occupied_set = 0, 4096"), InvalidArgument);
    EXPECT_THROW(parse_config("n_channels = 0"), InvalidArgument);
    EXPECT_THROW(parse_config("B = 2"), InvalidArgument);              // B < U
    EXPECT_THROW(parse_config("qam_order = 32"), InvalidArgument);
    EXPECT_THROW(parse_config("snr_db = 5:1:0"), InvalidArgument);
    EXPECT_THROW(parse_config("just text"), InvalidArgument);
}

TEST(Config, ErrorNamesTheLine)
{
    try {
        parse_config("U = 4\nL = oops\n");
        FAIL();
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(Config, MissingFileIsAnIoError)
{
    EXPECT_THROW(load_config("/nonexistent/dir/none.cfg"), IoError);
}

// ---------------------------------------------------------------------------
// Scheduling and reproducibility
// ---------------------------------------------------------------------------

TEST(Parallel, ResultsAreIndexedAndLowestErrorWins)
{
    const auto r = parallel_map(50, 4, [](std::size_t i) { return static_cast<int>(i * i); });
    for (std::size_t i = 0; i < r.size(); ++i) EXPECT_EQ(r[i], static_cast<int>(i * i));
    try {
        parallel_map(20, 4, [](std::size_t i) -> int {
            if (i == 7 || i == 13) throw std::runtime_error("task " + std::to_string(i));
            return 0;
        });
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "task 7");
    }
}

TEST(ChannelSet, RealizationDoesNotDependOnCount)
{
    const ExperimentConfig c = tiny();
    const ChannelSet a = ChannelSet::draw(c, 8, 2, 1);
    const ChannelSet b = ChannelSet::draw(c, 8, 5, 3);
    for (int i = 0; i < 2; ++i) EXPECT_EQ(a[i].taps()[3], b[i].taps()[3]);
    const ChannelSet other_b = ChannelSet::draw(c, 12, 1, 1);
    EXPECT_NE(a[0].taps()[0](0, 0), other_b[0].taps()[0](0, 0));
}

TEST(MonteCarlo, OutputBytesIndependentOfThreadCount)
{
    ExperimentConfig c = tiny();
    c.quantizers = {Quantizer::one_bit, Quantizer::infinite};
    const auto d1 = scratch("det1"), d3 = scratch("det3");
    emit_results(run_monte_carlo(c, {1, nullptr}), d1, OutputFormat::csv);
    emit_results(run_monte_carlo(c, {3, nullptr}), d3, OutputFormat::csv);
    for (const char* f : {"evm.csv", "constellation_one_bit_none.csv", "constellation_infinite_none.csv", "report.json"})
        EXPECT_EQ(slurp(d1 / f), slurp(d3 / f)) << f;
}

TEST(MonteCarlo, SeedChangesResults)
{
    ExperimentConfig a = tiny(), b = tiny();
    b.master_seed = 2;
    EXPECT_NE(run_monte_carlo(a).rows[0].evm_empirical_pct, run_monte_carlo(b).rows[0].evm_empirical_pct);
}

TEST(MonteCarlo, RowCarriesBothColumnsAndConstellation)
{
    const RunReport r = run_monte_carlo(tiny());
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_TRUE(r.rows[0].evm_empirical_pct.has_value());
    EXPECT_TRUE(r.rows[0].evm_analytical_pct.has_value());
    EXPECT_GT(r.rows[0].ci_halfwidth_pct, 0.0);
    ASSERT_EQ(r.constellations.size(), 1u);
    EXPECT_EQ(r.constellations[0].points.size(), 2u * 3u * 5u * 2u);
}

// ---------------------------------------------------------------------------
// Sweeps and thresholds
// ---------------------------------------------------------------------------

TEST(Threshold, WindowAroundMinimumWithInterpolation)
{
    const std::vector<double> snr{0, 5, 10, 15, 20};
    const std::vector<double> evm{20, 10, 6, 7, 12};
    const ThresholdCrossing c = threshold_window(snr, evm, {"x", 8.0});
    ASSERT_TRUE(c.supported && c.low_db && c.high_db);
    EXPECT_NEAR(*c.low_db, 5.0 + 5.0 * 2.0 / 4.0, 1e-12);
    EXPECT_NEAR(*c.high_db, 15.0 + 5.0 * 1.0 / 5.0, 1e-12);
    EXPECT_DOUBLE_EQ(c.snr_at_min_db, 10.0);
    EXPECT_FALSE(threshold_window(snr, evm, {"y", 5.0}).supported);
    const ThresholdCrossing open = threshold_window(snr, evm, {"z", 30.0});
    EXPECT_FALSE(open.low_db.has_value());
    EXPECT_FALSE(open.high_db.has_value());
}

TEST(Sweep, RowCountAndCsvHeader)
{
    ExperimentConfig c = tiny();
    c.antennas = {4, 6, 8};
    c.snr_db = harness::detail::parse_grid("snr_db", "-10:5:50");
    c.quantizers = {Quantizer::one_bit, Quantizer::infinite};
    c.empirical = false;
    c.evm_thresholds = {{"64QAM", 8.0}};
    const RunReport r = run_sweep(c);
    EXPECT_EQ(r.rows.size(), 78u);
    const std::string csv = evm_csv(r.rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "B,U,snr_db,quantizer,dither_mode,d0,evm_empirical_pct,evm_analytical_pct,ci_halfwidth_pct,n_channels,"
              "n_symbols,seed");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 79);
    EXPECT_EQ(r.crossings.size(), 6u);
}

TEST(Sweep, OneBitCurveIsNotMonotone)
{
    ExperimentConfig c = tiny();
    c.antennas = {16};
    c.snr_db = {-10, 0, 10, 20, 30, 40, 50};
    c.empirical = false;
    const RunReport r = run_sweep(c);
    double lo = 1e9;
    for (const auto& row : r.rows) lo = std::min(lo, *row.evm_analytical_pct);
    EXPECT_GT(*r.rows.back().evm_analytical_pct, lo * 1.2);
}

// ---------------------------------------------------------------------------
// Dither optimization
// ---------------------------------------------------------------------------

TEST(DitherOpt, LowSnrKeepsDitherNegligible)
{
    ExperimentConfig c = tiny();
    const ChannelSet ch = ChannelSet::draw(c, 8, c.opt_channels, 1);
    const DitherOptimization o = optimize_dither(c, ch, -10.0, Quantizer::one_bit, DitherMode::gaussian);
    EXPECT_LE(o.d0, c.symbol_energy * 1e-3);
    EXPECT_LE(o.evm_pct, o.evm_undithered_pct);
}

TEST(DitherOpt, HighSnrGaussianDitherHelps)
{
    ExperimentConfig c = tiny();
    const ChannelSet ch = ChannelSet::draw(c, 8, c.opt_channels, 1);
    const DitherOptimization o = optimize_dither(c, ch, 50.0, Quantizer::one_bit, DitherMode::gaussian);
    EXPECT_GT(o.d0, 0.0);
    EXPECT_LT(o.evm_pct, o.evm_undithered_pct);
    EXPECT_EQ(o.method, "golden_section");
}

TEST(DitherOpt, BinaryUsesGridAndHelpsAtHighSnr)
{
    ExperimentConfig c = tiny();
    c.opt_grid_points = 9;
    const ChannelSet ch = ChannelSet::draw(c, 8, c.opt_channels, 1);
    const DitherOptimization o = optimize_dither(c, ch, 50.0, Quantizer::one_bit, DitherMode::uniform_binary);
    EXPECT_EQ(o.method, "grid");
    EXPECT_EQ(o.evaluations.size(), 10u);
    EXPECT_LT(o.evm_pct, o.evm_undithered_pct);
}

TEST(DitherOpt, RejectsNoneMode)
{
    ExperimentConfig c = tiny();
    const ChannelSet ch = ChannelSet::draw(c, 8, 1, 1);
    EXPECT_THROW(optimize_dither(c, ch, 10.0, Quantizer::one_bit, DitherMode::none), InvalidArgument);
}

TEST(GoldenSection, FindsParabolaMinimumAndFlagsInteriorMaximum)
{
    const auto r = harness::detail::golden_section([](double x) { return (x - 1.3) * (x - 1.3) + 2.0; }, -4, 4, 1e-4, 0.0);
    ASSERT_TRUE(r);
    EXPECT_NEAR(r->first, 1.3, 1e-3);
    const auto bad = harness::detail::golden_section([](double x) { return -(x - 0.3) * (x - 0.3); }, -4, 4, 1e-4, 0.0);
    EXPECT_FALSE(bad.has_value());
}

// ---------------------------------------------------------------------------
// PSD command
// ---------------------------------------------------------------------------

TEST(PsdCommand, PeaksAtCarrierAndColumnsAgreeInBand)
{
    ExperimentConfig c = tiny();
    c.samples = 1024;
    c.occupied = {1022, 1023, 0, 1, 2};
    std::sort(c.occupied.begin(), c.occupied.end());
    c.psd_segment_len = 1024;
    c.snr_db = {10};
    const RunReport r = run_psd(c);
    ASSERT_EQ(r.psd.size(), 1u);
    const PsdTable& t = r.psd[0];
    EXPECT_EQ(t.freq_hz.size(), 513u);
    EXPECT_EQ(t.analytical_db.size(), 513u);
    const double bin = c.sample_rate_hz / 1024;
    EXPECT_NEAR(t.peak_freq_analytical_hz, 2.4e9, bin);
    EXPECT_NEAR(*t.inband_empirical_db, *t.inband_analytical_db, 1.5);
    const std::string csv = psd_csv(t);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "freq_hz,psd_db_empirical,psd_db_analytical");
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

TEST(Report, JsonRoundTripsThroughValidator)
{
    const RunReport r = run_monte_carlo(tiny());
    const Json j = Json::parse(report_to_json(r).dump());
    EXPECT_NO_THROW(validate_report_json(j));
    const auto rows = evm_rows_from_json(j);
    ASSERT_EQ(rows.size(), r.rows.size());
    EXPECT_EQ(rows[0].evm_empirical_pct, r.rows[0].evm_empirical_pct);
    EXPECT_EQ(rows[0].seed, r.rows[0].seed);
    EXPECT_EQ(evm_csv(rows), evm_csv(r.rows));
}

TEST(Report, ValidatorRejectsBrokenDocuments)
{
    Json j = report_to_json(run_monte_carlo(tiny()));
    Json missing = j;
    missing.erase("rows");
    EXPECT_THROW(validate_report_json(missing), InvalidArgument);
    Json wrong = j;
    wrong["rows"][0]["B"] = "thirty-two";
    EXPECT_THROW(validate_report_json(wrong), InvalidArgument);
    Json tag = j;
    tag["schema"] = "other";
    EXPECT_THROW(validate_report_json(tag), InvalidArgument);
}

TEST(Report, ChannelFixtureRoundTrip)
{
    RandomStream rs(1, 1);
    const ChannelRealization ch = draw_channel(4, 2, 3, rs);
    const ChannelRealization back = channel_from_json(Json::parse(channel_to_json(ch).dump()));
    ASSERT_EQ(back.tap_count(), 3);
    for (int l = 0; l < 3; ++l) EXPECT_EQ(back.taps()[l], ch.taps()[l]);
    EXPECT_THROW(channel_from_json(Json{{"schema", "rfmimo.channel/1"}, {"B", 2}, {"U", 1}, {"L", 1},
                                        {"re", {1.0}}, {"im", {0.0}}}),
                 InvalidArgument);
}

TEST(Report, EmitWritesAtomicallyAndListsArtifacts)
{
    const auto dir = scratch("emit");
    const auto files = emit_results(run_monte_carlo(tiny()), dir, OutputFormat::csv);
    EXPECT_EQ(files.back(), "report.json");
    for (const auto& f : files) EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        EXPECT_EQ(e.path().string().find(".tmp"), std::string::npos);
    const auto jdir = scratch("emit_json");
    EXPECT_EQ(emit_results(run_monte_carlo(tiny()), jdir, OutputFormat::json), std::vector<std::string>{"report.json"});
}

TEST(Report, UnwritableDirectoryIsAnIoError)
{
    EXPECT_THROW(emit_results(RunReport{}, "/proc/rfmimo_cannot_exist", OutputFormat::csv), IoError);
}
