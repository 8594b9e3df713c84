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

#include <stdexcept>
#include <string>

namespace rfmimo {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad dimensions, out-of-range indices, malformed configuration values.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A requested mode the operation does not support (e.g. analytical EVM
/// under binary dither).
class UnsupportedMode : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Singular combiners, arcsine domain violations, degenerate statistics.
class NumericalError : public Error {
public:
    using Error::Error;
};

class SingularMatrix : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DomainError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DegenerateInput : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class IoError : public Error {
public:
    using Error::Error;
};

inline void require(bool condition, const std::string& message)
{
    if (!condition) throw InvalidArgument(message);
}

} // namespace rfmimo
