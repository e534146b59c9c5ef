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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ern/tensor.hpp"

namespace ern::kernels {

/// Geometry of a w1a2 convolution. Out-of-bounds taps read activation code 0.
struct ConvSpec {
  std::size_t in_ch = 0;
  std::size_t out_ch = 0;
  std::size_t kh = 1;
  std::size_t kw = 1;
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;

  /// Square kernel with "same" padding k / 2.
  static ConvSpec square(std::size_t in_ch, std::size_t out_ch, std::size_t k, std::size_t stride);

  /// Throws ShapeError for zero kernel/stride/channels.
  void validate() const;
  /// floor((H + 2p - k) / s) + 1; throws ShapeError when the kernel does not fit.
  std::size_t out_height(std::size_t h) const;
  std::size_t out_width(std::size_t w) const;
  std::size_t fan_in() const { return in_ch * kh * kw; }
  /// Largest |acc| any output element can reach: 3 * fan_in.
  std::int64_t acc_bound() const { return 3 * static_cast<std::int64_t>(fan_in()); }

  bool operator==(const ConvSpec&) const = default;
};

/// Instruction-set variants of the popcount convolution.
enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);
std::optional<Isa> parse_isa(std::string_view name);
/// Variants compiled in and supported by the running CPU; scalar is always first.
std::vector<Isa> available_isas();
/// Fastest available variant, unless ERN_FORCE_ISA names another available one.
Isa default_isa();

struct ConvOptions {
  int threads = 1;
  std::optional<Isa> isa;
};

/// Reference integer convolution over byte codes:
/// acc[o,y,x] = sum_{c,i,j} sign[o,c,i,j] * code[c, y*s+i-p, x*s+j-p].
IntAccTensor conv_w1a2_naive(const Act2Tensor& x, const PackedWeights& w, const ConvSpec& spec,
                             int threads = 1);

/// Bitplane convolution. Per 64-lane word, the +/-1 weighted sum of a plane is
/// 2*popcount(w & plane) - popcount(plane); the two planes combine as 2*hi + lo.
/// Bit-identical to conv_w1a2_naive.
IntAccTensor conv_w1a2_popcount(const PackedPlanes& x, const PackedWeights& w, const ConvSpec& spec,
                                const ConvOptions& opts = {});

/// Elementwise sum of two accumulator maps produced under the same shared
/// constant scale. Throws DomainError if a sum leaves the int32 range.
IntAccTensor residual_add(const IntAccTensor& a, const IntAccTensor& b);

/// Bound of a residual sum: the sum of its branch bounds. In debug builds the
/// operands are checked against their declared bounds.
std::int64_t residual_bound(const IntAccTensor& a, std::int64_t bound_a, const IntAccTensor& b,
                            std::int64_t bound_b);

/// logit[c] = alpha[c] * (sum_{y,x} acc[c,y,x] / (H*W)); `alpha` has one entry
/// per channel or a single entry shared by all channels. Integer sums first.
std::vector<double> avgpool_and_scale(const IntAccTensor& acc, std::span<const double> alpha);

}  // namespace ern::kernels
