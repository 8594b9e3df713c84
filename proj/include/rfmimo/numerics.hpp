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

#include "rfmimo/errors.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace rfmimo {

using cplx = std::complex<double>;

/// Dense complex matrix; every matrix-valued quantity of the model (channel
/// taps, frequency responses, combiners, distortion covariances) is one.
using ComplexGrid = Eigen::MatrixXcd;
using RealGrid = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

template <class Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m)
{
    return m.allFinite();
}

/// e^{j 2 pi q / n} for integer q, reduced modulo n before evaluating so
/// large index products do not lose phase accuracy.
inline cplx unit_root(std::int64_t q, std::int64_t n)
{
    q %= n;
    if (q < 0) q += n;
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(q) / static_cast<double>(n);
    return {std::cos(angle), std::sin(angle)};
}

/// e^{j 2 pi x} using only the fractional part of x.
inline cplx unit_phase(double cycles)
{
    const double frac = cycles - std::floor(cycles);
    const double angle = 2.0 * std::numbers::pi * frac;
    return {std::cos(angle), std::sin(angle)};
}

/// Table of e^{sign * j 2 pi i / n}, i = 0..n-1.
inline std::vector<cplx> roots_of_unity(std::size_t n, int sign = +1)
{
    std::vector<cplx> table(n);
    for (std::size_t i = 0; i < n; ++i) {
        const cplx w = unit_root(static_cast<std::int64_t>(i), static_cast<std::int64_t>(n));
        table[i] = sign >= 0 ? w : std::conj(w);
    }
    return table;
}

namespace detail {

inline void fft_radix2_inplace(std::vector<cplx>& a, int sign)
{
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const std::vector<cplx> roots = roots_of_unity(n, sign);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t j = 0; j < half; ++j) {
                const cplx u = a[i + j];
                const cplx v = a[i + j + half] * roots[j * stride];
                a[i + j] = u + v;
                a[i + j + half] = u - v;
            }
        }
    }
}

inline std::vector<cplx> dft_direct(std::span<const cplx> x, int sign)
{
    const std::size_t n = x.size();
    const std::vector<cplx> roots = roots_of_unity(n, sign);
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc{0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) acc += x[i] * roots[(k * i) % n];
        out[k] = acc;
    }
    return out;
}

inline std::vector<cplx> transform(std::span<const cplx> x, int sign)
{
    if (x.empty()) throw InvalidArgument("dft: empty input");
    if (std::has_single_bit(x.size())) {
        std::vector<cplx> a(x.begin(), x.end());
        fft_radix2_inplace(a, sign);
        return a;
    }
    return dft_direct(x, sign);
}

} // namespace detail

/// Unnormalized forward DFT, X_k = sum_n x_n e^{-j 2 pi k n / N}.
/// Radix-2 for power-of-two lengths, direct summation otherwise.
inline std::vector<cplx> dft(std::span<const cplx> x)
{
    return detail::transform(x, -1);
}

/// Inverse DFT with the 1/N factor, so idft(dft(x)) == x.
inline std::vector<cplx> idft(std::span<const cplx> spectrum)
{
    std::vector<cplx> x = detail::transform(spectrum, +1);
    const double scale = 1.0 / static_cast<double>(x.size());
    for (cplx& v : x) v *= scale;
    return x;
}

/// Smallest-to-largest singular value ratio below which a tall matrix is
/// treated as rank deficient.
inline constexpr double kRankTolerance = 1e-12;

/// Left pseudo-inverse (A^H A)^{-1} A^H of a tall, full-column-rank matrix.
/// `context` is prefixed to the error message (e.g. "subcarrier 4093").
inline ComplexGrid pseudo_inverse(const ComplexGrid& a, const std::string& context = {})
{
    const auto prefix = context.empty() ? std::string("pseudo_inverse") : "pseudo_inverse (" + context + ")";
    if (a.rows() < a.cols() || a.cols() < 1)
        throw InvalidArgument(prefix + ": expected a tall matrix, got " + std::to_string(a.rows()) + "x" +
                              std::to_string(a.cols()));
    if (!a.allFinite()) throw NumericalError(prefix + ": non-finite entries");

    const ComplexGrid gram = a.adjoint() * a;
    const Eigen::SelfAdjointEigenSolver<ComplexGrid> eig(gram, Eigen::EigenvaluesOnly);
    const double lmax = eig.eigenvalues().maxCoeff();
    const double lmin = eig.eigenvalues().minCoeff();
    // eigenvalues of the Gram matrix are squared singular values
    if (!(lmax > 0.0) || lmin < kRankTolerance * kRankTolerance * lmax)
        throw SingularMatrix(prefix + ": matrix is rank deficient");

    const Eigen::LLT<ComplexGrid> llt(gram);
    if (llt.info() != Eigen::Success) throw SingularMatrix(prefix + ": Cholesky factorization failed");
    return llt.solve(a.adjoint());
}

inline constexpr double kArcsineClipTolerance = 1e-9;

/// asin(v) for |v| <= 1 + kArcsineClipTolerance; small overshoot is clipped.
inline double clipped_arcsine(double v)
{
    if (std::abs(v) > 1.0) {
        if (!(std::abs(v) <= 1.0 + kArcsineClipTolerance))
            throw DomainError("arcsine argument " + std::to_string(v) + " outside [-1, 1]");
        v = v > 0.0 ? 1.0 : -1.0;
    }
    return std::asin(v);
}

/// Entry-wise arcsine of a normalized correlation matrix.
inline RealGrid elementwise_arcsine(const RealGrid& m)
{
    RealGrid out(m.rows(), m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) out(i, j) = clipped_arcsine(m(i, j));
    return out;
}

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

/// SplitMix64 finalizer, used for seed mixing and stream-id derivation.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Independent random substream identified by (master_seed, stream_id).
///
/// Backed by a 64-bit Mersenne Twister whose 19937-bit state is expanded from
/// both identifiers through std::seed_seq. Streams are single-owner; callers
/// parallelize by creating one stream per work item.
class RandomStream {
public:
    RandomStream(std::uint64_t master_seed, std::uint64_t stream_id)
        : master_seed_(master_seed), stream_id_(stream_id), engine_(make_engine(master_seed, stream_id))
    {
    }

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    /// Standard normal draw.
    double gaussian() { return normal_(engine_); }

    /// Circularly-symmetric complex normal with total variance `variance`.
    cplx complex_gaussian(double variance)
    {
        const double sd = std::sqrt(variance / 2.0);
        const double re = gaussian();
        const double im = gaussian();
        return {sd * re, sd * im};
    }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n)
    {
        std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
        return dist(engine_);
    }

    bool coin() { return (engine_() >> 63) != 0; }

    std::uint64_t bits() { return engine_(); }

private:
    static std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t id)
    {
        const std::uint64_t a = mix64(seed);
        const std::uint64_t b = mix64(id ^ 0x5851f42d4c957f2dULL);
        std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                          static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                          static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(id)};
        return std::mt19937_64(seq);
    }

    std::uint64_t master_seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Convenience for code that only needs standard normals from a stream.
class GaussianStream {
public:
    explicit GaussianStream(RandomStream stream) : stream_(std::move(stream)) {}
    double operator()() { return stream_.gaussian(); }

private:
    RandomStream stream_;
};

inline GaussianStream gaussian_stream(const RandomStream& rs)
{
    return GaussianStream(RandomStream(rs.master_seed(), rs.stream_id()));
}

/// Randomness consumers. Values are part of the reproducibility contract:
/// never renumber, only append.
enum class StreamPurpose : std::uint64_t {
    channel = 1,
    symbols = 2,
    noise = 3,
    dither = 4,
    validation = 5,
};

/// stream_id = hash(purpose, trial, sub-trial).
constexpr std::uint64_t derive_stream_id(StreamPurpose purpose, std::uint64_t trial, std::uint64_t sub = 0)
{
    std::uint64_t h = mix64(static_cast<std::uint64_t>(purpose));
    h = mix64(h ^ trial);
    h = mix64(h ^ (sub + 0x632be59bd9b4e019ULL));
    return h;
}

inline RandomStream make_stream(std::uint64_t master_seed, StreamPurpose purpose, std::uint64_t trial,
                                std::uint64_t sub = 0)
{
    return RandomStream(master_seed, derive_stream_id(purpose, trial, sub));
}

} // namespace rfmimo
