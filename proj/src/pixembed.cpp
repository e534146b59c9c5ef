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

#include "ern/pixembed.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "ern/error.hpp"
#include "ern/instrument.hpp"

namespace ern::pixembed {

ThermoParams thermo_params(int k, int l) {
  if (k < 1) throw DomainError("thermometer length k must be >= 1, got " + std::to_string(k));
  if (l < 1 || l > 8) throw DomainError("thermometer bits l must be in [1,8], got " + std::to_string(l));
  ThermoParams p;
  p.k = k;
  p.l = l;
  p.s = std::max(1, 255 / (((1 << l) - 1) * k));
  p.w.resize(k);
  p.b.resize(k);
  for (int i = 0; i < k; ++i) {
    p.w[i] = 1.0 / (static_cast<double>(p.s) * k);
    p.b[i] = 1.0 - static_cast<double>(i + 1) / k;
  }
  return p;
}

std::vector<std::uint8_t> encode_pixel(std::uint8_t x, const ThermoParams& p) {
  instrument::count_real_ops(static_cast<std::uint64_t>(p.k));
  std::vector<std::uint8_t> z(p.k);
  const double hi = p.max_code();
  const double den = static_cast<double>(p.s) * p.k;
  for (int i = 0; i < p.k; ++i) {
    // w_i x + b_i as one quotient of exact integers: rounding cannot cross an
    // integer, while the two-step form misrounds at exact transitions.
    const double y = std::floor((x + static_cast<double>(p.s) * (p.k - i - 1)) / den);
    z[i] = static_cast<std::uint8_t>(std::clamp(y, 0.0, hi));
  }
  return z;
}

Act2Tensor encode_image(const ImageU8& img, const ThermoParams& p) {
  if (img.dims.channels != 3)
    throw ShapeError("pixel embedding expects 3 color channels, got " +
                     std::to_string(img.dims.channels));
  if (img.dims.height == 0 || img.dims.width == 0 || img.pixels.size() != img.dims.size())
    throw ShapeError("image dims do not match pixel buffer");
  if (p.l != 2) throw DomainError("activation maps hold 2-bit codes; thermometer l must be 2");

  // The encoding depends only on the 8-bit value, so tabulate it once.
  std::array<std::vector<std::uint8_t>, 256> table;
  for (int x = 0; x < 256; ++x) table[x] = encode_pixel(static_cast<std::uint8_t>(x), p);

  const std::size_t k = static_cast<std::size_t>(p.k);
  const Dims3 out{3 * k, img.dims.height, img.dims.width};
  std::vector<std::uint8_t> codes(out.size());
  const std::size_t plane = out.plane();
  for (std::size_t c = 0; c < 3; ++c) {
    const std::uint8_t* src = img.pixels.data() + c * plane;
    for (std::size_t i = 0; i < k; ++i) {
      std::uint8_t* dst = codes.data() + (c * k + i) * plane;
      for (std::size_t px = 0; px < plane; ++px) dst[px] = table[src[px]][i];
    }
  }
  return Act2Tensor(out, std::move(codes));
}

}  // namespace ern::pixembed
