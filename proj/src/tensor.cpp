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

#include "ern/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "ern/error.hpp"

namespace ern {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string dims_str(const Dims3& d) {
  return "(" + std::to_string(d.channels) + "," + std::to_string(d.height) + "," +
         std::to_string(d.width) + ")";
}

void check_dims(const Dims3& d, std::size_t n) {
  if (d.channels == 0 || d.height == 0 || d.width == 0)
    throw ShapeError("tensor dims must be >= 1, got " + dims_str(d));
  if (d.size() != n)
    throw ShapeError("element count " + std::to_string(n) + " does not match dims " + dims_str(d));
}

}  // namespace

FloatTensor::FloatTensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.size() != 3 && shape_.size() != 4)
    throw ShapeError("FloatTensor rank must be 3 or 4");
  if (product(shape_) != data_.size()) throw ShapeError("FloatTensor size does not match shape");
  for (double v : data_)
    if (!std::isfinite(v)) throw DomainError("FloatTensor element is not finite");
}

FloatTensor FloatTensor::zeros(std::vector<std::size_t> shape) {
  const std::size_t n = product(shape);
  return FloatTensor(std::move(shape), std::vector<double>(n, 0.0));
}

Act2Tensor::Act2Tensor(Dims3 dims, std::vector<std::uint8_t> codes)
    : dims_(dims), codes_(std::move(codes)) {
  check_dims(dims_, codes_.size());
  for (std::uint8_t c : codes_)
    if (c > 3) throw DomainError("activation code " + std::to_string(c) + " exceeds 3");
}

Act2Tensor Act2Tensor::zeros(Dims3 dims) {
  return Act2Tensor(dims, std::vector<std::uint8_t>(dims.size(), 0));
}

PackedPlanes::PackedPlanes(Dims3 dims, std::vector<std::uint64_t> words)
    : dims_(dims), groups_(words_for(dims.channels)), words_(std::move(words)) {
  if (dims_.channels == 0 || dims_.height == 0 || dims_.width == 0)
    throw ShapeError("packed planes dims must be >= 1, got " + dims_str(dims_));
  if (words_.size() != dims_.plane() * groups_ * 2)
    throw ShapeError("packed plane word count does not match dims " + dims_str(dims_));
}

IntAccTensor::IntAccTensor(Dims3 dims, std::vector<std::int32_t> values)
    : dims_(dims), values_(std::move(values)) {
  check_dims(dims_, values_.size());
}

PackedPlanes pack_activations(const Act2Tensor& a) {
  const Dims3& d = a.dims();
  const std::size_t groups = words_for(d.channels);
  std::vector<std::uint64_t> words(d.plane() * groups * 2, 0);
  const auto codes = a.codes();
  for (std::size_t c = 0; c < d.channels; ++c) {
    const std::size_t g = c / kLanes;
    const std::uint64_t bit = std::uint64_t{1} << (c % kLanes);
    const std::uint8_t* src = codes.data() + c * d.plane();
    for (std::size_t p = 0; p < d.plane(); ++p) {
      const std::uint8_t code = src[p];
      std::uint64_t* dst = words.data() + (p * groups + g) * 2;
      if (code & 2u) dst[0] |= bit;
      if (code & 1u) dst[1] |= bit;
    }
  }
  return PackedPlanes(d, std::move(words));
}

Act2Tensor unpack_activations(const PackedPlanes& p, std::size_t channels) {
  if (channels == 0 || channels > p.padded_channels())
    throw ShapeError("cannot unpack " + std::to_string(channels) + " channels from " +
                     std::to_string(p.padded_channels()) + " packed lanes");
  const Dims3 out{channels, p.dims().height, p.dims().width};
  std::vector<std::uint8_t> codes(out.size());
  const std::size_t groups = p.groups();
  const auto words = p.words();
  for (std::size_t c = 0; c < channels; ++c) {
    const std::size_t g = c / kLanes;
    const unsigned shift = static_cast<unsigned>(c % kLanes);
    for (std::size_t px = 0; px < out.plane(); ++px) {
      const std::uint64_t* w = words.data() + (px * groups + g) * 2;
      const auto hi = static_cast<std::uint8_t>((w[0] >> shift) & 1u);
      const auto lo = static_cast<std::uint8_t>((w[1] >> shift) & 1u);
      codes[c * out.plane() + px] = static_cast<std::uint8_t>(2 * hi + lo);
    }
  }
  return Act2Tensor(out, std::move(codes));
}

PackedWeights pack_weights(const FloatTensor& signs, std::span<const double> alpha,
                           bool const_scaled) {
  if (signs.rank() != 4) throw ShapeError("weight signs must be rank 4 (OC,IC,KH,KW)");
  const auto& s = signs.shape();
  PackedWeights w;
  w.out_ch = s[0];
  w.in_ch = s[1];
  w.kh = s[2];
  w.kw = s[3];
  w.const_scaled = const_scaled;
  if (w.out_ch == 0 || w.in_ch == 0 || w.kh == 0 || w.kw == 0)
    throw ShapeError("weight dims must be >= 1");
  if (alpha.size() != w.out_ch)
    throw ShapeError("alpha has " + std::to_string(alpha.size()) + " entries for " +
                     std::to_string(w.out_ch) + " output channels");
  for (double a : alpha)
    if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("scaling factor alpha must be > 0");
  w.alpha.assign(alpha.begin(), alpha.end());

  const std::size_t groups = w.groups();
  // Start from all-ones so pad lanes hold bit 1; clear bits for -1 weights.
  w.bits.assign(w.out_ch * w.kh * w.kw * groups, ~std::uint64_t{0});
  for (std::size_t o = 0; o < w.out_ch; ++o)
    for (std::size_t c = 0; c < w.in_ch; ++c)
      for (std::size_t i = 0; i < w.kh; ++i)
        for (std::size_t j = 0; j < w.kw; ++j) {
          const double v = signs.at(o, c, i, j);
          if (v == 1.0) continue;
          if (v != -1.0)
            throw DomainError("weight sign must be +1 or -1, got " + std::to_string(v));
          w.bits[((o * w.kh + i) * w.kw + j) * groups + c / kLanes] &=
              ~(std::uint64_t{1} << (c % kLanes));
        }
  return w;
}

FloatTensor unpack_signs(const PackedWeights& w) {
  std::vector<double> data(w.out_ch * w.in_ch * w.kh * w.kw);
  std::size_t n = 0;
  for (std::size_t o = 0; o < w.out_ch; ++o)
    for (std::size_t c = 0; c < w.in_ch; ++c)
      for (std::size_t i = 0; i < w.kh; ++i)
        for (std::size_t j = 0; j < w.kw; ++j) data[n++] = w.sign(o, c, i, j);
  return FloatTensor({w.out_ch, w.in_ch, w.kh, w.kw}, std::move(data));
}

}  // namespace ern
