/* Copyright 2026 The ERN Runtime Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <vector>

#include "ern/tensor.hpp"

// Generalized thermometer encoding: an 8-bit value x becomes k codes of l
// bits, z_i = clamp(floor(w_i * x + b_i), 0, 2^l - 1), with
//   s   = max(1, floor(255 / ((2^l - 1) * k)))
//   w_i = 1 / (s * k)
//   b_i = 1 - (i + 1) / k.
// Every output channel is non-decreasing in x.
namespace ern::pixembed {

struct ThermoParams {
  int k = 0;
  int l = 0;
  int s = 0;
  std::vector<double> w;
  std::vector<double> b;

  int max_code() const { return (1 << l) - 1; }
};

/// Throws DomainError unless k >= 1 and 1 <= l <= 8.
ThermoParams thermo_params(int k, int l);

std::vector<std::uint8_t> encode_pixel(std::uint8_t x, const ThermoParams& p);

/// (3, H, W) image to a (3k, H, W) activation map. Output channel c*k + i is
/// code i of color channel c. Requires l == 2.
Act2Tensor encode_image(const ImageU8& img, const ThermoParams& p);

}  // namespace ern::pixembed
