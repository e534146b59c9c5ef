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

#include <immintrin.h>

#include <vector>

#include "popcount_variants.hpp"

// Compiled with -mavx2 -mpopcnt; only reached after a runtime CPU check.
namespace ern::kernels::detail {

namespace {

constexpr std::size_t kBlock = kAvx2Block;
// Each step adds at most 2*8 + 8 = 24 to a byte counter.
constexpr int kStepsBeforeFlush = 10;

inline __m256i popcount_bytes(__m256i v) {
  const __m256i lookup = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                                          0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
  const __m256i low_mask = _mm256_set1_epi8(0x0f);
  const __m256i lo = _mm256_and_si256(v, low_mask);
  const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low_mask);
  return _mm256_add_epi8(_mm256_shuffle_epi8(lookup, lo), _mm256_shuffle_epi8(lookup, hi));
}

// Interleave the filters of channels [o, o + 8) so that word position p of
// all eight filters is contiguous: out[p * 8 + lane]. Missing channels get
// zero bits, which contribute nothing.
void interleave_block(const PackedWeights& w, std::size_t o, std::vector<std::uint64_t>& out) {
  const std::size_t n = w.words_per_filter();
  out.assign(n * kBlock, 0);
  for (std::size_t lane = 0; lane < kBlock && o + lane < w.out_ch; ++lane) {
    const std::uint64_t* f = w.filter(o + lane).data();
    for (std::size_t p = 0; p < n; ++p) out[p * kBlock + lane] = f[p];
  }
}

}  // namespace

void popcount_conv_avx2(const ConvGeometry& g, const std::uint64_t* planes, const PackedWeights& w,
                        const std::int32_t* window_sums, std::size_t o_begin, std::size_t o_end,
                        std::int32_t* out) {
  const std::size_t out_plane = g.out_h * g.out_w;
  const std::size_t pixel_words = 2 * g.groups;
  const __m256i zero = _mm256_setzero_si256();
  std::vector<std::uint64_t> block;
  alignas(32) std::int64_t sums[kBlock];

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

        __m256i acc64_0 = zero, acc64_1 = zero;
        __m256i acc8_0 = zero, acc8_1 = zero;
        int steps = 0;
        for (std::size_t i = i0; i < i1; ++i) {
          const std::uint64_t* x = planes + ((iy0 + i) * g.in_w + ix) * pixel_words;
          const std::uint64_t* wb = block.data() + (i * g.kw + j0) * g.groups * kBlock;
          for (std::size_t t = 0; t < run; ++t) {
            const __m256i hv = _mm256_set1_epi64x(static_cast<long long>(x[2 * t]));
            const __m256i lv = _mm256_set1_epi64x(static_cast<long long>(x[2 * t + 1]));
            const __m256i w0 = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(wb + t * kBlock));
            const __m256i w1 = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(wb + t * kBlock + 4));
            const __m256i h0 = popcount_bytes(_mm256_and_si256(w0, hv));
            const __m256i l0 = popcount_bytes(_mm256_and_si256(w0, lv));
            const __m256i h1 = popcount_bytes(_mm256_and_si256(w1, hv));
            const __m256i l1 = popcount_bytes(_mm256_and_si256(w1, lv));
            acc8_0 = _mm256_add_epi8(acc8_0, _mm256_add_epi8(_mm256_add_epi8(h0, h0), l0));
            acc8_1 = _mm256_add_epi8(acc8_1, _mm256_add_epi8(_mm256_add_epi8(h1, h1), l1));
            if (++steps == kStepsBeforeFlush) {
              acc64_0 = _mm256_add_epi64(acc64_0, _mm256_sad_epu8(acc8_0, zero));
              acc64_1 = _mm256_add_epi64(acc64_1, _mm256_sad_epu8(acc8_1, zero));
              acc8_0 = acc8_1 = zero;
              steps = 0;
            }
          }
        }
        acc64_0 = _mm256_add_epi64(acc64_0, _mm256_sad_epu8(acc8_0, zero));
        acc64_1 = _mm256_add_epi64(acc64_1, _mm256_sad_epu8(acc8_1, zero));
        _mm256_store_si256(reinterpret_cast<__m256i*>(sums), acc64_0);
        _mm256_store_si256(reinterpret_cast<__m256i*>(sums + 4), acc64_1);

        const std::int32_t window = window_sums[oy * g.out_w + ox];
        for (std::size_t lane = 0; lane < lanes; ++lane)
          out[(ob + lane) * out_plane + oy * g.out_w + ox] =
              static_cast<std::int32_t>(2 * sums[lane] - window);
      }
    }
  }
}

}  // namespace ern::kernels::detail
