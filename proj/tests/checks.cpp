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

#include "checks.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "ern/quant.hpp"
#include "test_util.hpp"

namespace ern::testing {

KernelSweep sweep_kernels(std::uint64_t seed, std::size_t instances) {
  static constexpr std::size_t kChannels[] = {3, 30, 64, 70, 128};
  static constexpr std::size_t kKernels[] = {1, 3, 7};
  std::mt19937_64 rng(seed);
  KernelSweep out;
  const auto isas = kernels::available_isas();
  for (auto isa : isas) out.isas.emplace_back(kernels::isa_name(isa));

  for (std::size_t n = 0; n < instances; ++n) {
    kernels::ConvSpec s;
    s.in_ch = kChannels[rng() % 5];
    s.out_ch = kChannels[rng() % 5];
    s.kh = kKernels[rng() % 3];
    s.kw = rng() % 4 == 0 ? kKernels[rng() % 3] : s.kh;
    s.stride_h = 1 + rng() % 2;
    s.stride_w = rng() % 4 == 0 ? 1 + rng() % 2 : s.stride_h;
    const std::size_t h = 1 + rng() % 16;
    const std::size_t w = 1 + rng() % 16;
    const bool no_pad = rng() % 4 == 0 && h >= s.kh && w >= s.kw;
    s.pad_h = no_pad ? 0 : s.kh / 2;
    s.pad_w = no_pad ? 0 : s.kw / 2;

    const Act2Tensor x = random_codes(rng, {s.in_ch, h, w});
    const PackedWeights wt = random_weights(rng, s.out_ch, s.in_ch, s.kh, s.kw);
    const IntAccTensor ref = kernels::conv_w1a2_naive(x, wt, s);
    for (std::int32_t v : ref.values()) out.bound_violations += std::llabs(v) > s.acc_bound();
    const PackedPlanes px = pack_activations(x);
    for (auto isa : isas) {
      kernels::ConvOptions opts;
      opts.isa = isa;
      opts.threads = 1 + static_cast<int>(n % 3);
      const IntAccTensor got = kernels::conv_w1a2_popcount(px, wt, s, opts);
      ++out.comparisons;
      if (!(got == ref)) {
        ++out.mismatches;
        if (out.first_failure.empty()) {
          std::ostringstream os;
          os << kernels::isa_name(isa) << " ic=" << s.in_ch << " oc=" << s.out_ch << " k=" << s.kh << "x" << s.kw
             << " s=" << s.stride_h << "," << s.stride_w << " p=" << s.pad_h << " hw=" << h << "x" << w;
          out.first_failure = os.str();
        }
      }
    }
    ++out.instances;
  }
  return out;
}

FusionSweep sweep_fusion(std::uint64_t seed, std::size_t draws, std::size_t max_fan_in) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53); };
  FusionSweep out;
  for (std::size_t d = 0; d < draws; ++d) {
    const double alpha = uni(0.01, 1.0);
    quant::BnChannel bn;
    bn.gamma = uni(0.1, 2.0) * (rng() % 2 ? 1.0 : -1.0);
    bn.beta = uni(-2.0, 2.0);
    bn.mean = uni(-5.0, 5.0);
    bn.var = uni(0.01, 4.0);
    bn.eps = 1e-5;
    const quant::ActParams act{uni(0.1, 2.0), 2};
    const auto fan_in = static_cast<std::int64_t>(1 + rng() % max_fan_in);
    const std::int64_t bound = 3 * fan_in;
    const quant::ThresholdChannel ch = quant::fuse_thresholds(alpha, bn, act, bound);
    for (std::int64_t acc = -bound; acc <= bound; ++acc) {
      const double v = quant::bn_preactivation(alpha, bn, static_cast<double>(acc));
      const double r = v / act.scale;
      ++out.evaluated;
      if (std::fabs(r - std::round(r)) < 1e-9) {
        ++out.ties;
        continue;
      }
      if (quant::quantize_act_float(v, act) != ch.code(acc)) {
        ++out.mismatches;
        if (out.first_failure.empty())
          out.first_failure = "draw " + std::to_string(d) + " acc " + std::to_string(acc);
      }
    }
    ++out.draws;
  }
  return out;
}

}  // namespace ern::testing
