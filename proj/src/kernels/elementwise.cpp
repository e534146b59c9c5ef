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

#include <cassert>
#include <cstdlib>
#include <limits>
#include <string>

#include "ern/error.hpp"
#include "ern/instrument.hpp"
#include "ern/kernels.hpp"

namespace ern::kernels {

IntAccTensor residual_add(const IntAccTensor& a, const IntAccTensor& b) {
  if (!(a.dims() == b.dims())) throw ShapeError("residual add operands differ in shape");
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<std::int32_t> out(av.size());
  bool overflow = false;
  for (std::size_t n = 0; n < av.size(); ++n) {
    const std::int64_t s = std::int64_t{av[n]} + bv[n];
    overflow |= s > std::numeric_limits<std::int32_t>::max() || s < std::numeric_limits<std::int32_t>::min();
    out[n] = static_cast<std::int32_t>(s);
  }
  if (overflow) throw DomainError("residual add overflowed the 32-bit accumulator");
  return IntAccTensor(a.dims(), std::move(out));
}

std::int64_t residual_bound(const IntAccTensor& a, std::int64_t bound_a, const IntAccTensor& b,
                            std::int64_t bound_b) {
#ifndef NDEBUG
  for (std::int32_t v : a.values()) assert(std::llabs(v) <= bound_a);
  for (std::int32_t v : b.values()) assert(std::llabs(v) <= bound_b);
#else
  (void)a;
  (void)b;
#endif
  return bound_a + bound_b;
}

std::vector<double> avgpool_and_scale(const IntAccTensor& acc, std::span<const double> alpha) {
  const Dims3& d = acc.dims();
  if (d.plane() == 0) throw ShapeError("average pooling over an empty spatial map");
  if (alpha.size() != 1 && alpha.size() != d.channels)
    throw ShapeError("head scale has " + std::to_string(alpha.size()) + " entries for " +
                     std::to_string(d.channels) + " channels");
  instrument::count_real_ops(2 * d.channels);
  std::vector<double> logits(d.channels);
  const double area = static_cast<double>(d.plane());
  for (std::size_t c = 0; c < d.channels; ++c) {
    std::int64_t sum = 0;
    for (std::int32_t v : acc.channel(c)) sum += v;
    const double a = alpha.size() == 1 ? alpha[0] : alpha[c];
    logits[c] = a * (static_cast<double>(sum) / area);
  }
  return logits;
}

}  // namespace ern::kernels
