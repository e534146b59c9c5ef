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

#include <bit>

#include "popcount_variants.hpp"

namespace ern::kernels::detail {

namespace {

// sum_t 2*pc(w[t] & hi[t]) + pc(w[t] & lo[t]) over n words; `hl` interleaves hi/lo.
inline std::int64_t plane_dot(const std::uint64_t* w, const std::uint64_t* hl, std::size_t n) {
  std::int64_t hi = 0, lo = 0;
  for (std::size_t t = 0; t < n; ++t) {
    hi += std::popcount(w[t] & hl[2 * t]);
    lo += std::popcount(w[t] & hl[2 * t + 1]);
  }
  return 2 * hi + lo;
}

}  // namespace

void popcount_conv_scalar(const ConvGeometry& g, const std::uint64_t* planes, const PackedWeights& w,
                          const std::int32_t* window_sums, std::size_t o_begin, std::size_t o_end,
                          std::int32_t* out) {
  const std::size_t out_plane = g.out_h * g.out_w;
  const std::size_t pixel_words = 2 * g.groups;
  for (std::size_t o = o_begin; o < o_end; ++o) {
    const std::uint64_t* filter = w.filter(o).data();
    std::int32_t* dst = out + o * out_plane;
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      std::size_t i0, i1;
      ConvGeometry::tap_range(oy, g.stride_h, g.pad_h, g.kh, g.in_h, i0, i1);
      const std::size_t iy0 = oy * g.stride_h - g.pad_h;  // wraps when negative; only used + i0
      for (std::size_t ox = 0; ox < g.out_w; ++ox) {
        std::size_t j0, j1;
        ConvGeometry::tap_range(ox, g.stride_w, g.pad_w, g.kw, g.in_w, j0, j1);
        const std::size_t ix = ox * g.stride_w - g.pad_w + j0;
        const std::size_t run = (j1 - j0) * g.groups;
        std::int64_t s = 0;
        for (std::size_t i = i0; i < i1; ++i) {
          const std::uint64_t* x = planes + ((iy0 + i) * g.in_w + ix) * pixel_words;
          const std::uint64_t* wr = filter + (i * g.kw + j0) * g.groups;
          s += plane_dot(wr, x, run);
        }
        dst[oy * g.out_w + ox] = static_cast<std::int32_t>(2 * s - window_sums[oy * g.out_w + ox]);
      }
    }
  }
}

}  // namespace ern::kernels::detail
