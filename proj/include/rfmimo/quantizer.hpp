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

#include "rfmimo/txchain.hpp"

namespace rfmimo {

/// sign() with sign(0) = +1.
inline double one_bit_sign(double v) { return v >= 0.0 ? 1.0 : -1.0; }

/// Entry-wise 1-bit quantization; output alphabet is {-1, +1}.
inline RfFrame one_bit(const RfFrame& rf)
{
    RfFrame out{rf.samples.unaryExpr([](double v) { return one_bit_sign(v); }), FrameStage::one_bit};
    return out;
}

/// Infinite-resolution baseline: values pass through unchanged.
inline RfFrame passthrough(const RfFrame& rf)
{
    return RfFrame{rf.samples, FrameStage::infinite_resolution};
}

enum class Quantizer { one_bit, infinite };

inline std::string to_string(Quantizer q) { return q == Quantizer::one_bit ? "one_bit" : "infinite"; }

inline Quantizer parse_quantizer(const std::string& s)
{
    if (s == "one_bit" || s == "1bit") return Quantizer::one_bit;
    if (s == "infinite" || s == "inf") return Quantizer::infinite;
    throw InvalidArgument("unknown quantizer '" + s + "'");
}

inline RfFrame quantize(const RfFrame& rf, Quantizer q)
{
    return q == Quantizer::one_bit ? one_bit(rf) : passthrough(rf);
}

} // namespace rfmimo
