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
#include "rfmimo/errors.hpp"
#include "rfmimo/numerics.hpp"
#include "rfmimo/quantizer.hpp"
#include "rfmimo/rxchain.hpp"
#include "rfmimo/system.hpp"
#include "rfmimo/txchain.hpp"
