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


#include "rfmimo/channel.hpp"
#include "rfmimo/quantizer.hpp"
#include "rfmimo/txchain.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace rfmimo;

TEST(Channel, SingleTapResponseEqualsTap)
{
    ComplexGrid h0(2, 1);
    h0 << cplx(1, 0), cplx(0, 1);
    const ChannelRealization ch({h0});
    for (int k : {0, 5, 4095}) EXPECT_LT((freq_response(ch.taps(), k, 4096) - h0).norm(), 1e-15);
}

TEST(Channel, ResponseMatchesDirectSum)
{
    RandomStream rs(1, 1);
    const ChannelRealization ch = draw_channel(3, 2, 7, rs);
    const int N = 32, k = 5;
    ComplexGrid ref = ComplexGrid::Zero(3, 2);
    for (int l = 0; l < 7; ++l)
        ref += ch.taps()[l] * std::polar(1.0, -2.0 * std::numbers::pi * k * l / N);
    EXPECT_LT((freq_response(ch.taps(), k, N) - ref).norm(), 1e-13);
}

TEST(Channel, UnitAveragePowerPerEntry)
{
    RandomStream rs(5, 5);
    double p = 0.0;
    const int draws = 200;
    for (int d = 0; d < draws; ++d) {
        const ChannelRealization ch = draw_channel(8, 2, 50, rs);
        for (const auto& t : ch.taps()) p += t.squaredNorm();
    }
    // sum over taps of E|h|^2 is 1 per antenna/user pair
    EXPECT_NEAR(p / (draws * 8 * 2), 1.0, 0.02);
}

TEST(Channel, RejectsMoreUsersThanAntennas)
{
    RandomStream rs(1, 1);
    EXPECT_THROW(draw_channel(2, 3, 4, rs), InvalidArgument);
}

TEST(Channel, ResponseCacheAndErrors)
{
    RandomStream rs(1, 1);
    ChannelRealization ch = draw_channel(4, 2, 3, rs);
    EXPECT_THROW(ch.response(3), InvalidArgument);
    const std::vector<int> occ{1, 3};
    ch.cache_responses(occ, 16);
    EXPECT_TRUE(ch.has_response(3));
    EXPECT_LT((ch.response(3) - freq_response(ch.taps(), 3, 16)).norm(), 1e-15);
    EXPECT_THROW(freq_response(ch.taps(), 16, 16), InvalidArgument);
}

TEST(Qam, AverageEnergyAndGrayAdjacency)
{
    for (int order : {4, 16, 64, 256}) {
        const QamConstellation q(order, 2.5);
        double e = 0.0;
        for (const cplx& p : q.points()) e += std::norm(p);
        EXPECT_NEAR(e / order, 2.5, 1e-12) << order;
        const double d = 2.0 * q.scale();
        for (int a = 0; a < order; ++a)
            for (int b = a + 1; b < order; ++b)
                if (std::abs(std::abs(q.point(a) - q.point(b)) - d) < 1e-9) {
                    EXPECT_EQ(std::popcount(static_cast<unsigned>(a ^ b)), 1) << order << ": " << a << " vs " << b;
                }
    }
}

TEST(Qam, NearestLabelRecoversEveryPoint)
{
    const QamConstellation q(16, 1.0);
    for (int l = 0; l < 16; ++l) EXPECT_EQ(q.nearest_label(q.point(l) + cplx(0.05, -0.05)), l);
}

TEST(Qam, RejectsUnsupportedOrder)
{
    EXPECT_THROW(QamConstellation(8, 1.0), InvalidArgument);
    EXPECT_THROW(QamConstellation(16, 0.0), InvalidArgument);
}

TEST(Qam, MapperIsUniformOverLabels)
{
    RandomStream rs(2, 2);
    std::map<int, int> counts;
    const std::vector<int> occ{0, 1, 2};
    for (int i = 0; i < 4000; ++i) {
        const auto s = map_qam(rs, 4, 1.0, 2, occ);
        for (int l : s.labels) ++counts[l];
    }
    for (const auto& [label, c] : counts) EXPECT_NEAR(c / 24000.0, 0.25, 0.015) << label;
}

TEST(Ofdm, ModulationMatchesScaledInverseDft)
{
    RandomStream rs(3, 3);
    const int N = 64;
    const std::vector<int> occ{0, 1, 62, 63};
    const FrequencySymbols s = map_qam(rs, 16, 1.0, 2, occ);
    const ComplexRows t = ofdm_modulate(s, N);
    for (int u = 0; u < 2; ++u) {
        std::vector<cplx> spec(N);
        for (std::size_t i = 0; i < occ.size(); ++i) spec[occ[i]] = s.values(u, static_cast<Eigen::Index>(i));
        const auto ref = idft(spec);
        for (int n = 0; n < N; ++n) EXPECT_LT(std::abs(t(u, n) - ref[n] * std::sqrt(double(N))), 1e-12);
    }
}

TEST(Ofdm, ChannelEqualsCyclicPrefixConvolution)
{
    RandomStream rs(4, 4);
    const int N = 64, L = 8;
    const ChannelRealization ch = draw_channel(3, 2, L, rs);
    std::vector<int> occ;
    for (int k = 0; k < N; k += 5) occ.push_back(k);
    const FrequencySymbols s = map_qam(rs, 16, 1.0, 2, occ);
    const ComplexRows tx = ofdm_modulate(s, N);
    // CP of L-1 samples, linear convolution, CP removal
    std::vector<ComplexVector> ext;
    for (int t = -(L - 1); t < N; ++t) ext.push_back(tx.col((t + N) % N));
    ComplexRows rx = ComplexRows::Zero(3, N);
    for (int n = 0; n < N; ++n)
        for (int l = 0; l < L; ++l) rx.col(n) += ch.taps()[l] * ext[n + (L - 1) - l];
    EXPECT_LT((apply_channel(s, ch, N).samples - rx).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Ofdm, RejectsTooManyTaps)
{
    RandomStream rs(4, 4);
    const ChannelRealization ch = draw_channel(2, 1, 20, rs);
    const std::vector<int> occ{0};
    const FrequencySymbols s = map_qam(rs, 4, 1.0, 1, occ);
    EXPECT_THROW(apply_channel(s, ch, 16), InvalidArgument);
}

TEST(Upconvert, MatchesDefinition)
{
    BasebandFrame bb{ComplexRows(1, 8)};
    for (int n = 0; n < 8; ++n) bb.samples(0, n) = cplx(0.1 * n, -0.2 + 0.05 * n);
    const RfParams rf{2.4e9, 10e9};
    const RfFrame out = upconvert(bb, rf);
    for (int n = 0; n < 8; ++n) {
        const double ref = std::sqrt(2.0) * (bb.samples(0, n) * std::polar(1.0, 2.0 * std::numbers::pi * 0.24 * n)).real();
        EXPECT_NEAR(out.samples(0, n), ref, 1e-14);
    }
}

TEST(Upconvert, RejectsCarrierAboveNyquist)
{
    BasebandFrame bb{ComplexRows::Zero(1, 4)};
    EXPECT_THROW(upconvert(bb, RfParams{6e9, 10e9}), InvalidArgument);
}

TEST(Noise, VarianceIsHalfNoisePower)
{
    RfFrame zero{RealRows::Zero(4, 20000), FrameStage::analog};
    RandomStream rs(1, 1);
    const RfFrame y = add_noise_and_dither(zero, 0.8, {}, rs);
    EXPECT_NEAR(y.samples.squaredNorm() / y.samples.size(), 0.4, 0.01);
}

TEST(Dither, BinaryTakesTwoValuesAndGaussianHasPowerHalfD0)
{
    RfFrame zero{RealRows::Zero(2, 20000), FrameStage::analog};
    RandomStream a(1, 1), b(1, 2);
    const RfFrame bin = add_noise_and_dither(zero, 0.0, {DitherMode::uniform_binary, 0.5}, a, b);
    for (Eigen::Index i = 0; i < bin.samples.size(); ++i) EXPECT_NEAR(std::abs(bin.samples.data()[i]), 0.5, 1e-15);
    EXPECT_NEAR(bin.samples.mean(), 0.0, 0.02);
    RandomStream c(1, 3), d(1, 4);
    const RfFrame gau = add_noise_and_dither(zero, 0.0, {DitherMode::gaussian, 0.5}, c, d);
    EXPECT_NEAR(gau.samples.squaredNorm() / gau.samples.size(), 0.25, 0.01);
    EXPECT_THROW(add_noise_and_dither(zero, 0.0, {DitherMode::none, 0.5}, c, d), InvalidArgument);
}

TEST(Quantizer, SignOfZeroIsPlusOne)
{
    RfFrame y{RealRows(1, 4), FrameStage::analog};
    y.samples << -0.3, 0.0, 2.0, -0.0;
    const RfFrame z = one_bit(y);
    EXPECT_EQ(z.samples(0, 0), -1.0);
    EXPECT_EQ(z.samples(0, 1), 1.0);
    EXPECT_EQ(z.samples(0, 2), 1.0);
    EXPECT_EQ(z.samples(0, 3), 1.0);
    EXPECT_EQ(z.stage, FrameStage::one_bit);
}

TEST(Quantizer, PassthroughKeepsValues)
{
    RfFrame y{RealRows::Random(2, 5), FrameStage::analog};
    const RfFrame z = quantize(y, Quantizer::infinite);
    EXPECT_EQ(z.samples, y.samples);
    EXPECT_EQ(z.stage, FrameStage::infinite_resolution);
    EXPECT_THROW(parse_quantizer("two_bit"), InvalidArgument);
}
