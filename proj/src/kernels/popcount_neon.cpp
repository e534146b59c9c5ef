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

#include <arm_neon.h>

#include <vector>

#include "popcount_variants.hpp"

namespace ern::kernels::detail {

namespace {

constexpr std::size_t kBlock = kNeonBlock;
constexpr int kStepsBeforeFlush = 10;

inline uint8x16_t popcount_and(uint64x2_t a, uint64x2_t b) {
  return vcntq_u8(vreinterpretq_u8_u64(vandq_u64(a, b)));
}

inline uint64x2_t widen(uint8x16_t v) { return vpaddlq_u32(vpaddlq_u16(vpaddlq_u8(v))); }

void interleave_block(const PackedWeights& w, std::size_t o, std::vector<std::uint64_t>& out) {
  const std::size_t n = w.words_per_filter();
  out.assign(n * kBlock, 0);
  for (std::size_t lane = 0; lane < kBlock && o + lane < w.out_ch; ++lane) {
    const std::uint64_t* f = w.filter(o + lane).data();
    for (std::size_t p = 0; p < n; ++p) out[p * kBlock + lane] = f[p];
  }
}

}  // namespace

void popcount_conv_neon(const ConvGeometry& g, const std::uint64_t* planes, const PackedWeights& w,
                        const std::int32_t* window_sums, std::size_t o_begin, std::size_t o_end,
                        std::int32_t* out) {
  const std::size_t out_plane = g.out_h * g.out_w;
  const std::size_t pixel_words = 2 * g.groups;
  std::vector<std::uint64_t> block;
  std::uint64_t sums[kBlock];

  for (std::size_t ob = o_begin; ob < o_end; ob += kBlock) {
    interleave_block(w, ob, block);
    const std::size_t lanes = std::min(kBlock, o_end - ob);
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      std::size_t i0, i1;
      ConvGeometry::tap_range(oy, g.stride_h, g.pad_h, g.kh, g.in_h, i0, i1);
      const std::size_t iy0 = oy * g.stride_h - g.pad_h;
      for (std::size_t ox = 0; ox < g.out_w; ++ox) {
        std::size_t j0, j1;
        ConvGeometry::tap_range(ox, g.stride_w, g.pad_w, g.kw, g.in_w, j0, j1);
        const std::size_t ix = ox * g.stride_w - g.pad_w + j0;
        const std::size_t run = (j1 - j0) * g.groups;

        uint64x2_t acc64_0 = vdupq_n_u64(0), acc64_1 = vdupq_n_u64(0);
        uint8x16_t acc8_0 = vdupq_n_u8(0), acc8_1 = vdupq_n_u8(0);
        int steps = 0;
        for (std::size_t i = i0; i < i1; ++i) {
          const std::uint64_t* x = planes + ((iy0 + i) * g.in_w + ix) * pixel_words;
          const std::uint64_t* wb = block.data() + (i * g.kw + j0) * g.groups * kBlock;
          for (std::size_t t = 0; t < run; ++t) {
            const uint64x2_t hv = vdupq_n_u64(x[2 * t]);
            const uint64x2_t lv = vdupq_n_u64(x[2 * t + 1]);
            const uint64x2_t w0 = vld1q_u64(wb + t * kBlock);
            const uint64x2_t w1 = vld1q_u64(wb + t * kBlock + 2);
            const uint8x16_t h0 = popcount_and(w0, hv), l0 = popcount_and(w0, lv);
            const uint8x16_t h1 = popcount_and(w1, hv), l1 = popcount_and(w1, lv);
            acc8_0 = vaddq_u8(acc8_0, vaddq_u8(vaddq_u8(h0, h0), l0));
            acc8_1 = vaddq_u8(acc8_1, vaddq_u8(vaddq_u8(h1, h1), l1));
            if (++steps == kStepsBeforeFlush) {
              acc64_0 = vaddq_u64(acc64_0, widen(acc8_0));
              acc64_1 = vaddq_u64(acc64_1, widen(acc8_1));
              acc8_0 = acc8_1 = vdupq_n_u8(0);
              steps = 0;
            }
          }
        }
        acc64_0 = vaddq_u64(acc64_0, widen(acc8_0));
        acc64_1 = vaddq_u64(acc64_1, widen(acc8_1));
        vst1q_u64(sums, acc64_0);
        vst1q_u64(sums + 2, acc64_1);

        const std::int64_t window = window_sums[oy * g.out_w + ox];
        for (std::size_t lane = 0; lane < lanes; ++lane)
          out[(ob + lane) * out_plane + oy * g.out_w + ox] =
              static_cast<std::int32_t>(2 * static_cast<std::int64_t>(sums[lane]) - window);
      }
    }
  }
}

}  // namespace ern::kernels::detail
