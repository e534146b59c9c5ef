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

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <string>

#include "ern/error.hpp"
#include "ern/kernels.hpp"
#include "ern/parallel.hpp"
#include "popcount_variants.hpp"

namespace ern::kernels {

ConvSpec ConvSpec::square(std::size_t in_ch, std::size_t out_ch, std::size_t k, std::size_t stride) {
  return ConvSpec{in_ch, out_ch, k, k, stride, stride, k / 2, k / 2};
}

void ConvSpec::validate() const {
  if (in_ch == 0 || out_ch == 0) throw ShapeError("conv channels must be >= 1");
  if (kh == 0 || kw == 0) throw ShapeError("conv kernel must be >= 1");
  if (stride_h == 0 || stride_w == 0) throw ShapeError("conv stride must be >= 1");
}

namespace {

std::size_t out_extent(std::size_t in, std::size_t pad, std::size_t k, std::size_t stride) {
  if (in + 2 * pad < k)
    throw ShapeError("input extent " + std::to_string(in) + " too small for kernel " + std::to_string(k));
  return (in + 2 * pad - k) / stride + 1;
}

}  // namespace

std::size_t ConvSpec::out_height(std::size_t h) const { return out_extent(h, pad_h, kh, stride_h); }
std::size_t ConvSpec::out_width(std::size_t w) const { return out_extent(w, pad_w, kw, stride_w); }

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

std::optional<Isa> parse_isa(std::string_view name) {
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon})
    if (isa_name(isa) == name) return isa;
  return std::nullopt;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out{Isa::scalar};
#if defined(ERN_HAVE_AVX2_TU)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("popcnt")) out.push_back(Isa::avx2);
#endif
#if defined(ERN_HAVE_NEON_TU)
  out.push_back(Isa::neon);
#endif
  return out;
}

Isa default_isa() {
  static const Isa chosen = [] {
    const auto avail = available_isas();
    if (const char* forced = std::getenv("ERN_FORCE_ISA")) {
      if (auto isa = parse_isa(forced); isa && std::ranges::find(avail, *isa) != avail.end())
        return *isa;
    }
    return avail.back();
  }();
  return chosen;
}

namespace {

void check_conv_shapes(const Dims3& x, const PackedWeights& w, const ConvSpec& spec) {
  spec.validate();
  if (x.channels != spec.in_ch)
    throw ShapeError("conv input has " + std::to_string(x.channels) + " channels, the conv expects " +
                     std::to_string(spec.in_ch));
  if (w.in_ch != spec.in_ch || w.out_ch != spec.out_ch || w.kh != spec.kh || w.kw != spec.kw)
    throw ShapeError("conv weights do not match the conv shape");
  if (w.bits.size() != w.out_ch * w.words_per_filter())
    throw ShapeError("conv weight storage has the wrong word count");
}

// Plain sum of input codes under every output window; shared by all output channels.
std::vector<std::int32_t> window_code_sums(const PackedPlanes& x, const detail::ConvGeometry& g) {
  std::vector<std::int32_t> pixel(g.in_h * g.in_w);
  const auto words = x.words();
  for (std::size_t p = 0; p < pixel.size(); ++p) {
    std::int32_t s = 0;
    for (std::size_t k = 0; k < g.groups; ++k)
      s += 2 * std::popcount(words[(p * g.groups + k) * 2]) + std::popcount(words[(p * g.groups + k) * 2 + 1]);
    pixel[p] = s;
  }
  std::vector<std::int32_t> out(g.out_h * g.out_w);
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    std::size_t i0, i1;
    detail::ConvGeometry::tap_range(oy, g.stride_h, g.pad_h, g.kh, g.in_h, i0, i1);
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      std::size_t j0, j1;
      detail::ConvGeometry::tap_range(ox, g.stride_w, g.pad_w, g.kw, g.in_w, j0, j1);
      std::int32_t s = 0;
      for (std::size_t i = i0; i < i1; ++i)
        for (std::size_t j = j0; j < j1; ++j)
          s += pixel[(oy * g.stride_h + i - g.pad_h) * g.in_w + (ox * g.stride_w + j - g.pad_w)];
      out[oy * g.out_w + ox] = s;
    }
  }
  return out;
}

}  // namespace

IntAccTensor conv_w1a2_popcount(const PackedPlanes& x, const PackedWeights& w, const ConvSpec& spec,
                                const ConvOptions& opts) {
  check_conv_shapes(x.dims(), w, spec);
  const Isa isa = opts.isa.value_or(default_isa());
  const auto avail = available_isas();
  if (std::ranges::find(avail, isa) == avail.end())
    throw DomainError("popcount variant '" + std::string(isa_name(isa)) + "' is not available on this CPU");

  detail::ConvGeometry g{};
  g.in_h = x.dims().height;
  g.in_w = x.dims().width;
  g.out_h = spec.out_height(g.in_h);
  g.out_w = spec.out_width(g.in_w);
  g.kh = spec.kh;
  g.kw = spec.kw;
  g.stride_h = spec.stride_h;
  g.stride_w = spec.stride_w;
  g.pad_h = spec.pad_h;
  g.pad_w = spec.pad_w;
  g.groups = x.groups();

  const auto sums = window_code_sums(x, g);
  const Dims3 out_dims{spec.out_ch, g.out_h, g.out_w};
  std::vector<std::int32_t> out(out_dims.size());

  detail::PopcountConvFn fn = detail::popcount_conv_scalar;
  std::size_t block = detail::kScalarBlock;
#if defined(ERN_HAVE_AVX2_TU)
  if (isa == Isa::avx2) {
    fn = detail::popcount_conv_avx2;
    block = detail::kAvx2Block;
  }
#endif
#if defined(ERN_HAVE_NEON_TU)
  if (isa == Isa::neon) {
    fn = detail::popcount_conv_neon;
    block = detail::kNeonBlock;
  }
#endif

  const std::size_t blocks = (spec.out_ch + block - 1) / block;
  const std::uint64_t* planes = x.words().data();
  parallel_for(blocks, opts.threads, [&](std::size_t b0, std::size_t b1) {
    fn(g, planes, w, sums.data(), b0 * block, std::min(spec.out_ch, b1 * block), out.data());
  });
  return IntAccTensor(out_dims, std::move(out));
}

}  // namespace ern::kernels
