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


#include "rfmimo/bussgang.hpp"
#include "rfmimo/quantizer.hpp"
#include "rfmimo/rxchain.hpp"
#include "rfmimo/txchain.hpp"

#include <gtest/gtest.h>

using namespace rfmimo;

namespace {

struct Small {
    SignalModel model;
    ChannelRealization ch;
};

Small small_system(int B, int U, int N, int half, int L, double snr_db, std::uint64_t seed = 11)
{
    Small s;
    s.model.layout = OfdmLayout::symmetric(N, half);
    s.model.rf = {2.4e9, 10e9};
    s.model.noise_power = 1.0 / db_to_linear(snr_db);
    RandomStream rs(seed, 1);
    s.ch = draw_channel(B, U, L, rs);
    s.ch.cache_responses(s.model.layout.occupied, N);
    return s;
}

std::vector<int> lags_upto(int n)
{
    std::vector<int> l(n);
    for (int i = 0; i < n; ++i) l[i] = i;
    return l;
}

} // namespace

// ---------------------------------------------------------------------------
// DDC / ZF / EVM
// ---------------------------------------------------------------------------

TEST(Ddc, MatchesDirectDefinition)
{
    const OfdmLayout layout = OfdmLayout::symmetric(64, 2);
    const RfParams rf{2.4e9, 10e9};
    RfFrame z{RealRows::Random(3, 64), FrameStage::one_bit};
    const BasebandSubcarriers out = ddc(z, layout, rf);
    for (std::size_t i = 0; i < layout.occupied.size(); ++i)
        for (int b = 0; b < 3; ++b) {
            cplx ref{0.0, 0.0};
            for (int n = 0; n < 64; ++n)
                ref += z.samples(b, n) * std::polar(1.0, -2.0 * std::numbers::pi * (layout.occupied[i] / 64.0 + 0.24) * n);
            ref *= std::sqrt(2.0 / 64.0);
            EXPECT_LT(std::abs(out.values(b, static_cast<Eigen::Index>(i)) - ref), 1e-12);
        }
}

TEST(Ddc, RecoversNoiselessSubcarriersUpToImageLeakage)
{
    const Small s = small_system(4, 2, 4096, 4, 100, 10.0);
    RandomStream rs(1, 2);
    const FrequencySymbols sym = map_qam(rs, 16, 1.0, 2, s.model.layout.occupied);
    const RfFrame x = upconvert(apply_channel(sym, s.ch, 4096), s.model.rf);
    const BasebandSubcarriers zb = ddc(x, s.model.layout, s.model.rf);
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < sym.occupied.size(); ++i) {
        const ComplexVector expect = s.ch.response(sym.occupied[i]) * sym.values.col(static_cast<Eigen::Index>(i));
        err += (zb.values.col(static_cast<Eigen::Index>(i)) - expect).squaredNorm();
        ref += expect.squaredNorm();
    }
    EXPECT_LT(std::sqrt(err / ref), 1e-2);
}

TEST(Ddc, RejectsWrongFrameLength)
{
    RfFrame z{RealRows::Zero(1, 32), FrameStage::one_bit};
    EXPECT_THROW(ddc(z, OfdmLayout::symmetric(64, 1), RfParams{}), InvalidArgument);
}

TEST(Ddc, WhiteNoiseKeepsPowerN0)
{
    const OfdmLayout layout = OfdmLayout::symmetric(1024, 4);
    const RfParams rf{};
    double p = 0.0;
    const int frames = 200;
    for (int f = 0; f < frames; ++f) {
        RandomStream rs(9, static_cast<std::uint64_t>(f));
        const RfFrame w = add_noise_and_dither(RfFrame{RealRows::Zero(8, 1024), FrameStage::analog}, 2.0, {}, rs);
        p += ddc(w, layout, rf).values.squaredNorm();
    }
    EXPECT_NEAR(p / (frames * 8 * 9), 2.0, 0.06);
}

TEST(Zf, IsLeftInverseAndRecoversSymbols)
{
    const Small s = small_system(16, 4, 256, 2, 16, 10.0);
    const DiagonalGain g = signal_gain(s.ch, s.model);
    RandomStream rs(2, 2);
    const FrequencySymbols sym = map_qam(rs, 16, 1.0, 4, s.model.layout.occupied);
    BasebandSubcarriers zb{sym.occupied, ComplexGrid(16, sym.subcarrier_count())};
    for (int i = 0; i < sym.subcarrier_count(); ++i) {
        const int k = sym.occupied[static_cast<std::size_t>(i)];
        const ComplexGrid gh = g.diag.asDiagonal() * s.ch.response(k);
        EXPECT_LT((zf_matrix(s.ch.response(k), g, k) * gh - ComplexGrid::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-10);
        zb.values.col(i) = gh * sym.values.col(i);
    }
    const SymbolEstimates est = zf_combine(zb, s.ch, g);
    EXPECT_LT((est.values - sym.values).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Evm, AccumulatorPoolsEnergies)
{
    FrequencySymbols truth;
    truth.occupied = {0, 1};
    truth.values = ComplexGrid::Ones(1, 2);
    SymbolEstimates est{{0, 1}, ComplexGrid::Ones(1, 2)};
    est.values(0, 0) = cplx(1.1, 0.0);
    EvmAccumulator a;
    a.add(est, truth);
    EXPECT_NEAR(a.percent(), 100.0 * std::sqrt(0.01 / 2.0), 1e-12);
    EvmAccumulator b;
    b.add(SymbolEstimates{{0, 1}, ComplexGrid::Ones(1, 2)}, truth);
    a.merge(b);
    EXPECT_NEAR(a.percent(), 100.0 * std::sqrt(0.01 / 4.0), 1e-12);
    EXPECT_THROW(EvmAccumulator{}.ratio(), InvalidArgument);
    SymbolEstimates wrong{{0, 2}, ComplexGrid::Ones(1, 2)};
    EXPECT_THROW(a.add(wrong, truth), InvalidArgument);
}

TEST(Evm, InfiniteResolutionMatchesNoiseEnhancementFormula)
{
    const Small s = small_system(16, 4, 512, 2, 32, 10.0);
    EvmAccumulator acc;
    const DiagonalGain id = DiagonalGain::identity(16);
    for (int f = 0; f < 300; ++f) {
        RandomStream sym_rs(3, 2 * f), noise_rs(3, 2 * f + 1);
        const FrequencySymbols sym = map_qam(sym_rs, 16, 1.0, 4, s.model.layout.occupied);
        const RfFrame y = add_noise_and_dither(upconvert(apply_channel(sym, s.ch, 512), s.model.rf),
                                               s.model.noise_power, {}, noise_rs);
        acc.add(zf_combine(ddc(y, s.model.layout, s.model.rf), s.ch, id), sym);
    }
    const double ana = analytical_evm_unquantized(s.ch, s.model).percent();
    EXPECT_NEAR(acc.percent() / ana, 1.0, 0.05);
}

// ---------------------------------------------------------------------------
// PSD
// ---------------------------------------------------------------------------

TEST(Welch, WhiteNoiseIsFlatAtTwiceVarianceOverFs)
{
    const double fs = 1000.0, var = 0.5;
    WelchAccumulator w(256, fs);
    RandomStream rs(4, 4);
    std::vector<double> x(256 * 200);
    for (double& v : x) v = std::sqrt(var) * rs.gaussian();
    w.add_sequence(x);
    const PsdEstimate p = w.estimate();
    EXPECT_NEAR(p.band_mean(50.0, 450.0), 2.0 * var / fs, 0.05 * 2.0 * var / fs);
    EXPECT_NEAR(p.integrated_power(), var, 0.03 * var);
}

TEST(Welch, SinusoidPeaksAtItsFrequency)
{
    const double fs = 1024.0;
    std::vector<double> x(4096);
    for (std::size_t n = 0; n < x.size(); ++n) x[n] = std::cos(2.0 * std::numbers::pi * 100.0 * n / fs);
    WelchAccumulator w(512, fs);
    w.add_sequence(x);
    const PsdEstimate p = w.estimate();
    EXPECT_DOUBLE_EQ(p.freq_hz[p.peak_index()], 100.0);
    EXPECT_NEAR(p.integrated_power(), 0.5, 0.01);
}

TEST(Welch, RejectsSegmentLongerThanSequence)
{
    WelchAccumulator w(64, 1.0);
    std::vector<double> x(32, 1.0);
    EXPECT_THROW(w.add_sequence(x), InvalidArgument);
    EXPECT_THROW(WelchAccumulator(48, 1.0), InvalidArgument);
}

TEST(Constellation, ExportIsSortedByTrialSymbolSubcarrierUser)
{
    std::vector<TaggedEstimates> t;
    t.push_back({1, 0, {{0, 3}, ComplexGrid::Ones(2, 2)}});
    t.push_back({0, 1, {{0, 3}, ComplexGrid::Zero(2, 2)}});
    const auto pts = export_constellation(t);
    ASSERT_EQ(pts.size(), 8u);
    EXPECT_EQ(pts[0].trial, 0);
    EXPECT_EQ(pts[0].symbol, 1);
    EXPECT_EQ(pts[1].user, 1);
    EXPECT_EQ(pts[2].subcarrier, 3);
    EXPECT_EQ(pts[7].trial, 1);
}

// ---------------------------------------------------------------------------
// Second-order model
// ---------------------------------------------------------------------------

TEST(Autocov, StreamingAndMaterializedAgree)
{
    const Small s = small_system(4, 2, 64, 2, 8, 5.0);
    const LagModel lm(s.ch, s.model);
    const auto lags = lags_upto(64);
    const Autocovariance rx = autocov_x(s.ch, 1.0, s.model.layout, s.model.rf, lags);
    const Autocovariance ry = autocov_y(rx, s.model.noise_power, 0.0);
    const RealVector dy = ry.at(0).diagonal();
    const Autocovariance rz = arcsine_autocov(ry, dy);
    for (int m : lags) {
        EXPECT_LT((lm.rx(m) - rx.at(m)).cwiseAbs().maxCoeff(), 1e-13) << m;
        EXPECT_LT((lm.ry(m) - ry.at(m)).cwiseAbs().maxCoeff(), 1e-13) << m;
        EXPECT_LT((lm.rz(m) - rz.at(m)).cwiseAbs().maxCoeff(), 1e-12) << m;
    }
    EXPECT_TRUE((rz.at(0).diagonal().array() == 1.0).all());
}

TEST(Autocov, ZeroLagMatchesEmpiricalSampleCovariance)
{
    const Small s = small_system(3, 2, 64, 2, 8, 5.0);
    const Autocovariance rx = autocov_x(s.ch, 1.0, s.model.layout, s.model.rf, std::vector<int>{0, 3});
    RealGrid emp0 = RealGrid::Zero(3, 3), emp3 = RealGrid::Zero(3, 3);
    const int frames = 20000;
    for (int f = 0; f < frames; ++f) {
        RandomStream rs(6, static_cast<std::uint64_t>(f));
        const auto sym = gaussian_symbols(rs, 1.0, 2, s.model.layout.occupied);
        const RfFrame x = upconvert(apply_channel(sym, s.ch, 64), s.model.rf);
        for (int n = 0; n + 3 < 64; ++n) {
            emp0 += x.samples.col(n) * x.samples.col(n).transpose() / 61.0;
            emp3 += x.samples.col(n + 3) * x.samples.col(n).transpose() / 61.0;
        }
    }
    const double scale = rx.at(0).cwiseAbs().maxCoeff();
    EXPECT_LT((emp0 / frames - rx.at(0)).cwiseAbs().maxCoeff() / scale, 0.03);
    EXPECT_LT((emp3 / frames - rx.at(3)).cwiseAbs().maxCoeff() / scale, 0.03);
}

TEST(Bussgang, GainFormulaAndDegenerateInput)
{
    RealGrid ry0(2, 2);
    ry0 << 4.0, 0.5, 0.5, 0.25;
    const DiagonalGain g = bussgang_gain(ry0);
    EXPECT_NEAR(g.diag[0], std::sqrt(2.0 / std::numbers::pi) / 2.0, 1e-15);
    EXPECT_NEAR(g.diag[1], std::sqrt(2.0 / std::numbers::pi) / 0.5, 1e-15);
    ry0(1, 1) = 0.0;
    EXPECT_THROW(bussgang_gain(ry0), DegenerateInput);
}

TEST(Bussgang, GainMatchesMonteCarloOnGaussianInput)
{
    const Small s = small_system(4, 2, 256, 3, 16, 0.0);
    const DiagonalGain g = signal_gain(s.ch, s.model);
    RealVector zy = RealVector::Zero(4), yy = RealVector::Zero(4);
    for (int f = 0; f < 2000; ++f) {
        RandomStream sr(8, 2 * f), nr(8, 2 * f + 1);
        const auto sym = gaussian_symbols(sr, 1.0, 2, s.model.layout.occupied);
        const RfFrame y = add_noise_and_dither(upconvert(apply_channel(sym, s.ch, 256), s.model.rf),
                                               s.model.noise_power, {}, nr);
        const RfFrame z = one_bit(y);
        zy += z.samples.cwiseProduct(y.samples).rowwise().sum();
        yy += y.samples.cwiseProduct(y.samples).rowwise().sum();
    }
    for (int b = 0; b < 4; ++b) EXPECT_NEAR(zy[b] / yy[b] / g.diag[b], 1.0, 0.02) << b;
}

TEST(Distortion, StreamingMatchesMaterializedForBothLagSums)
{
    const Small s = small_system(3, 1, 64, 1, 4, 15.0);
    const LagModel lm(s.ch, s.model);
    const Autocovariance ry =
        autocov_y(autocov_x(s.ch, 1.0, s.model.layout, s.model.rf, lags_upto(64)), s.model.noise_power, 0.0);
    const RealVector dy = ry.at(0).diagonal();
    for (auto mode : {DistortionLagSum::one_sided, DistortionLagSum::two_sided_windowed}) {
        const auto streamed = lm.distortion_covariances({mode, 0});
        for (std::size_t i = 0; i < streamed.size(); ++i) {
            const int k = s.model.layout.occupied[i];
            const auto ref = distortion_cov(ry, dy, k, s.model.layout, s.model.rf, mode);
            EXPECT_LT((streamed[i].hermitian - ref.hermitian).cwiseAbs().maxCoeff(), 1e-12);
        }
    }
}

TEST(Distortion, TwoSidedSumIsHermitianAndPositiveSemidefinite)
{
    const Small s = small_system(4, 2, 64, 2, 8, 20.0);
    const auto cov = LagModel(s.ch, s.model).distortion_covariances({DistortionLagSum::two_sided_windowed, 0});
    for (const auto& c : cov) {
        EXPECT_LT(c.antihermitian_ratio, 1e-12);
        const Eigen::SelfAdjointEigenSolver<ComplexGrid> eig(c.hermitian);
        EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-12);
    }
}

TEST(Distortion, TracesEqualTraceOfWeightedCovariance)
{
    const Small s = small_system(4, 2, 64, 2, 8, 20.0);
    const LagModel lm(s.ch, s.model);
    std::vector<ComplexGrid> w;
    RandomStream rs(3, 3);
    for (std::size_t i = 0; i < s.model.layout.occupied.size(); ++i) {
        ComplexGrid a(2, 4);
        for (Eigen::Index j = 0; j < a.size(); ++j) a.data()[j] = rs.complex_gaussian(1.0);
        w.push_back(a.adjoint() * a);
    }
    for (auto mode : {DistortionLagSum::one_sided, DistortionLagSum::two_sided_windowed}) {
        const auto cov = lm.distortion_covariances({mode, 0});
        const auto tr = lm.distortion_traces(w, {mode, 0});
        for (std::size_t i = 0; i < cov.size(); ++i)
            EXPECT_NEAR(tr[i].real(), (w[i] * cov[i].hermitian).trace().real(), 1e-10);
    }
}

TEST(AnalyticalEvm, MatchesExplicitTraceFormula)
{
    const Small s = small_system(8, 2, 128, 2, 8, 10.0);
    const AnalyticalEvm evm = analytical_evm(s.ch, s.model);
    const SecondOrderStats st = LagModel(s.ch, s.model).stats();
    double num = 0.0;
    for (std::size_t i = 0; i < st.occupied.size(); ++i) {
        const int k = st.occupied[i];
        const ComplexGrid a = zf_matrix(s.ch.response(k), st.gain, k);
        const RealGrid g2 = st.gain.matrix() * st.gain.matrix();
        const ComplexGrid inner = st.effective_noise * g2.cast<cplx>() + st.distortion[i].hermitian;
        num += (a * inner * a.adjoint()).trace().real();
    }
    EXPECT_NEAR(evm.ratio(), num / (1.0 * 2 * st.occupied.size()), 1e-12);
    EXPECT_LT(evm.imag_ratio(), 0.01);
}

TEST(AnalyticalEvm, GaussianDitherActsLikeExtraNoise)
{
    Small s = small_system(8, 2, 128, 2, 8, 20.0);
    SignalModel dithered = s.model;
    dithered.dither = {DitherMode::gaussian, 0.3};
    SignalModel noisier = s.model;
    noisier.noise_power += 0.3;
    EXPECT_NEAR(analytical_evm(s.ch, dithered).percent(), analytical_evm(s.ch, noisier).percent(), 1e-10);
}

TEST(AnalyticalEvm, BinaryDitherIsUnsupported)
{
    Small s = small_system(8, 2, 128, 2, 8, 20.0);
    s.model.dither = {DitherMode::uniform_binary, 0.3};
    EXPECT_THROW(analytical_evm(s.ch, s.model), UnsupportedMode);
    EXPECT_THROW(dithered_stats(s.ch, s.model), UnsupportedMode);
}

TEST(AnalyticalEvm, AgreesWithMonteCarloOnSmallSystem)
{
    const Small s = small_system(16, 2, 256, 2, 16, 10.0);
    const DiagonalGain g = signal_gain(s.ch, s.model);
    EvmAccumulator acc;
    for (int f = 0; f < 400; ++f) {
        RandomStream sr(12, 2 * f), nr(12, 2 * f + 1);
        const auto sym = map_qam(sr, 16, 1.0, 2, s.model.layout.occupied);
        const RfFrame y = add_noise_and_dither(upconvert(apply_channel(sym, s.ch, 256), s.model.rf),
                                               s.model.noise_power, {}, nr);
        acc.add(zf_combine(ddc(one_bit(y), s.model.layout, s.model.rf), s.ch, g), sym);
    }
    EXPECT_NEAR(acc.percent() / analytical_evm(s.ch, s.model).percent(), 1.0, 0.05);
}

TEST(AnalyticalPsd, OneBitOutputHasUnitPower)
{
    const Small s = small_system(4, 2, 512, 2, 16, 10.0);
    const LagModel lm(s.ch, s.model);
    const PsdEstimate p = analytical_psd(lm);
    EXPECT_NEAR(p.integrated_power(), 1.0, 1e-9);
    EXPECT_NEAR(p.freq_hz[p.peak_index()], 2.4e9, 2.0 * p.bin_width());
}

TEST(AnalyticalPsd, DeltaAutocovIsFlat)
{
    std::vector<double> r(64, 0.0);
    r[0] = 3.0;
    const PsdEstimate p = psd_from_autocov(r, LagWindow::rectangular(64), 100.0);
    for (std::size_t i = 1; i + 1 < p.density.size(); ++i) EXPECT_NEAR(p.density[i], 2.0 * 3.0 / 100.0, 1e-14);
    EXPECT_NEAR(p.density.front(), 3.0 / 100.0, 1e-14);
}

TEST(AnalyticalPsd, ComponentsAddUpAwayFromZeroLag)
{
    const Small s = small_system(4, 2, 256, 2, 16, 10.0);
    const LagModel lm(s.ch, s.model);
    const auto t = diagonal_autocov(lm, 32, PsdComponent::total);
    const auto sg = diagonal_autocov(lm, 32, PsdComponent::signal);
    const auto d = diagonal_autocov(lm, 32, PsdComponent::distortion);
    for (std::size_t m = 1; m < 32; ++m) EXPECT_NEAR(t[m], sg[m] + d[m], 1e-14);
    // at lag 0 the white-noise share (2/pi) (N_eff/2) / D_y is the remainder
    double noise = 0.0;
    for (int b = 0; b < 4; ++b) noise += (2.0 / std::numbers::pi) * (s.model.noise_power / 2.0) / lm.dy()[b] / 4.0;
    EXPECT_NEAR(t[0], sg[0] + d[0] + noise, 1e-12);
}
