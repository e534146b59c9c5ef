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

#include <algorithm>
#include <cstddef>
#include <cstdint>

#include "ern/tensor.hpp"

// Entry points of the per-ISA popcount convolution variants. Each variant
// computes, for output channels [o_begin, o_end),
//   out[o, oy, ox] = 2 * sum_taps sum_g (2*pc(w & hi) + pc(w & lo)) - window_sum[oy, ox]
// where window_sum is the plain sum of input codes under the kernel window.
namespace ern::kernels::detail {

struct ConvGeometry {
  std::size_t in_h, in_w, out_h, out_w;
  std::size_t kh, kw, stride_h, stride_w, pad_h, pad_w;
  std::size_t groups;  // 64-lane words per pixel per plane

  // Valid tap range [lo, hi) along one axis for output coordinate `o`.
  static void tap_range(std::size_t o, std::size_t stride, std::size_t pad, std::size_t k,
                        std::size_t in, std::size_t& lo, std::size_t& hi) {
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(o * stride) - static_cast<std::ptrdiff_t>(pad);
    const std::ptrdiff_t first = std::max<std::ptrdiff_t>(0, -start);
    const std::ptrdiff_t last = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(k),
                                                         static_cast<std::ptrdiff_t>(in) - start);
    lo = static_cast<std::size_t>(first);
    hi = static_cast<std::size_t>(std::max(first, last));
  }
};

using PopcountConvFn = void (*)(const ConvGeometry& g, const std::uint64_t* planes,
                                const PackedWeights& w, const std::int32_t* window_sums,
                                std::size_t o_begin, std::size_t o_end, std::int32_t* out);

void popcount_conv_scalar(const ConvGeometry& g, const std::uint64_t* planes, const PackedWeights& w,
                          const std::int32_t* window_sums, std::size_t o_begin, std::size_t o_end,
                          std::int32_t* out);
inline constexpr std::size_t kScalarBlock = 1;

#if defined(ERN_HAVE_AVX2_TU)
void popcount_conv_avx2(const ConvGeometry& g, const std::uint64_t* planes, const PackedWeights& w,
                        const std::int32_t* window_sums, std::size_t o_begin, std::size_t o_end,
                        std::int32_t* out);
inline constexpr std::size_t kAvx2Block = 8;
#endif

#if defined(ERN_HAVE_NEON_TU)
void popcount_conv_neon(const ConvGeometry& g, const std::uint64_t* planes, const PackedWeights& w,
                        const std::int32_t* window_sums, std::size_t o_begin, std::size_t o_end,
                        std::int32_t* out);
inline constexpr std::size_t kNeonBlock = 4;
#endif

}  // namespace ern::kernels::detail
