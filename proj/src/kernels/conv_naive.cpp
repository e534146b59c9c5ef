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

#include <string>

#include "ern/error.hpp"
#include "ern/kernels.hpp"
#include "ern/parallel.hpp"

namespace ern::kernels {

IntAccTensor conv_w1a2_naive(const Act2Tensor& x, const PackedWeights& w, const ConvSpec& spec,
                             int threads) {
  spec.validate();
  const Dims3& in = x.dims();
  if (in.channels != spec.in_ch)
    throw ShapeError("conv input has " + std::to_string(in.channels) + " channels, the conv expects " +
                     std::to_string(spec.in_ch));
  if (w.in_ch != spec.in_ch || w.out_ch != spec.out_ch || w.kh != spec.kh || w.kw != spec.kw)
    throw ShapeError("conv weights do not match the conv shape");

  const std::size_t oh = spec.out_height(in.height);
  const std::size_t ow = spec.out_width(in.width);
  const Dims3 out_dims{spec.out_ch, oh, ow};
  std::vector<std::int32_t> out(out_dims.size(), 0);
  const auto codes = x.codes();
  const auto H = static_cast<std::ptrdiff_t>(in.height);
  const auto W = static_cast<std::ptrdiff_t>(in.width);

  parallel_for(spec.out_ch, threads, [&](std::size_t o_begin, std::size_t o_end) {
    for (std::size_t o = o_begin; o < o_end; ++o) {
      std::int32_t* acc = out.data() + o * oh * ow;
      for (std::size_t c = 0; c < spec.in_ch; ++c) {
        const std::uint8_t* plane = codes.data() + c * in.plane();
        for (std::size_t i = 0; i < spec.kh; ++i)
          for (std::size_t j = 0; j < spec.kw; ++j) {
            const std::int32_t s = w.sign(o, c, i, j);
            for (std::size_t oy = 0; oy < oh; ++oy) {
              const auto iy = static_cast<std::ptrdiff_t>(oy * spec.stride_h + i) -
                              static_cast<std::ptrdiff_t>(spec.pad_h);
              if (iy < 0 || iy >= H) continue;
              for (std::size_t ox = 0; ox < ow; ++ox) {
                const auto ix = static_cast<std::ptrdiff_t>(ox * spec.stride_w + j) -
                                static_cast<std::ptrdiff_t>(spec.pad_w);
                if (ix < 0 || ix >= W) continue;
                acc[oy * ow + ox] += s * plane[iy * W + ix];
              }
            }
          }
      }
    }
  });
  return IntAccTensor(out_dims, std::move(out));
}

}  // namespace ern::kernels
