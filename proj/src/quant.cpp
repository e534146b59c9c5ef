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

#include "ern/quant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ern/error.hpp"
#include "ern/instrument.hpp"

namespace ern::quant {

namespace {

// Sentinels for thresholds when no accumulator bound is known; far outside
// any reachable int32 accumulator and safe against overflow in comparisons.
constexpr std::int64_t kUnboundedLimit = std::int64_t{1} << 62;

std::int64_t clamp_to_int(double v, std::int64_t lo, std::int64_t hi) {
  if (std::isnan(v)) throw DomainError("threshold evaluated to NaN");
  if (v <= static_cast<double>(lo)) return lo;
  if (v >= static_cast<double>(hi)) return hi;
  return static_cast<std::int64_t>(v);
}

}  // namespace

BinarizedWeights binarize_weights(const FloatTensor& w) {
  if (w.rank() != 4) throw ShapeError("binarize_weights expects (OC,IC,KH,KW)");
  const std::size_t oc = w.shape()[0];
  const std::size_t per = w.size() / oc;
  instrument::count_real_ops(w.size());
  std::vector<double> signs(w.size());
  std::vector<double> alpha(oc, 0.0);
  const auto data = w.data();
  for (std::size_t o = 0; o < oc; ++o) {
    double sum = 0.0;
    for (std::size_t n = o * per; n < (o + 1) * per; ++n) {
      const double v = data[n];
      if (!std::isfinite(v)) throw DomainError("weight is not finite");
      signs[n] = v >= 0.0 ? 1.0 : -1.0;
      sum += std::fabs(v);
    }
    alpha[o] = sum / static_cast<double>(per);
  }
  return {FloatTensor(w.shape(), std::move(signs)), std::move(alpha)};
}

std::uint8_t quantize_act_float(double v, const ActParams& p) {
  instrument::count_real_ops(1);
  const double hi = static_cast<double>((1 << p.bits) - 1);
  return static_cast<std::uint8_t>(std::clamp(std::floor(v / p.scale), 0.0, hi));
}

double bn_preactivation(double alpha, const BnChannel& bn, double acc) {
  instrument::count_real_ops(1);
  return bn.gamma * (alpha * acc - bn.mean) / std::sqrt(bn.var + bn.eps) + bn.beta;
}

ThresholdChannel fuse_thresholds(double alpha, const BnChannel& bn, const ActParams& act,
                                 std::optional<std::int64_t> acc_bound) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be > 0");
  if (!(act.scale > 0.0) || !std::isfinite(act.scale))
    throw DomainError("activation scale must be > 0");
  if (act.bits != 2) throw DomainError("threshold tables hold exactly 3 thresholds (2-bit codes)");
  if (!std::isfinite(bn.gamma) || !std::isfinite(bn.beta) || !std::isfinite(bn.mean) ||
      !std::isfinite(bn.var) || !std::isfinite(bn.eps))
    throw DomainError("batch-norm parameter is not finite");
  if (bn.var < 0.0) throw DomainError("batch-norm variance must be >= 0");
  if (!(bn.var + bn.eps > 0.0)) throw DomainError("batch-norm var + eps must be > 0");
  instrument::count_real_ops(8);

  const std::int64_t lo = acc_bound ? -*acc_bound - 1 : -kUnboundedLimit;
  const std::int64_t hi = acc_bound ? *acc_bound + 1 : kUnboundedLimit;

  const double inv_std = 1.0 / std::sqrt(bn.var + bn.eps);
  const double slope = bn.gamma * alpha * inv_std;
  const double offset = bn.beta - bn.gamma * bn.mean * inv_std;

  ThresholdChannel ch;
  if (slope == 0.0) {
    const double c = std::clamp(std::floor(offset / act.scale), 0.0, 3.0);
    const int code = static_cast<int>(c);
    ch.degenerate = true;
    ch.dir = Direction::ascending;
    for (int u = 0; u < 3; ++u) ch.t[u] = u < code ? lo : hi;
    return ch;
  }

  for (int u = 1; u <= 3; ++u) {
    const double bound = (u * act.scale - offset) / slope;
    ch.t[u - 1] = slope > 0.0 ? clamp_to_int(std::ceil(bound), lo, hi)
                              : clamp_to_int(std::floor(bound), lo, hi);
  }
  if (slope < 0.0) {
    ch.dir = Direction::descending;
    std::sort(ch.t.begin(), ch.t.end());
  }
  return ch;
}

Act2Tensor apply_thresholds(const IntAccTensor& acc, const ThresholdTable& tbl) {
  const Dims3& d = acc.dims();
  if (tbl.channels.size() != d.channels)
    throw ShapeError("threshold table has " + std::to_string(tbl.channels.size()) +
                     " channels, accumulator has " + std::to_string(d.channels));
  std::vector<std::uint8_t> codes(d.size());
  for (std::size_t c = 0; c < d.channels; ++c) {
    const ThresholdChannel& ch = tbl.channels[c];
    const auto src = acc.channel(c);
    std::uint8_t* dst = codes.data() + c * d.plane();
    for (std::size_t p = 0; p < d.plane(); ++p) dst[p] = ch.code(src[p]);
  }
  return Act2Tensor(d, std::move(codes));
}

PackedPlanes apply_thresholds_packed(const IntAccTensor& acc, const ThresholdTable& tbl) {
  const Dims3& d = acc.dims();
  if (tbl.channels.size() != d.channels)
    throw ShapeError("threshold table has " + std::to_string(tbl.channels.size()) +
                     " channels, accumulator has " + std::to_string(d.channels));
  const std::size_t groups = words_for(d.channels);
  std::vector<std::uint64_t> words(d.plane() * groups * 2, 0);
  for (std::size_t c = 0; c < d.channels; ++c) {
    const ThresholdChannel& ch = tbl.channels[c];
    const auto src = acc.channel(c);
    const std::size_t g = c / kLanes;
    const std::uint64_t bit = std::uint64_t{1} << (c % kLanes);
    for (std::size_t p = 0; p < d.plane(); ++p) {
      const std::uint8_t code = ch.code(src[p]);
      std::uint64_t* dst = words.data() + (p * groups + g) * 2;
      if (code & 2u) dst[0] |= bit;
      if (code & 1u) dst[1] |= bit;
    }
  }
  return PackedPlanes(d, std::move(words));
}

}  // namespace ern::quant
