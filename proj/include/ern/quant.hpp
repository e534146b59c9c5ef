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

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "ern/tensor.hpp"

namespace ern::quant {

/// One channel of inference-mode batch normalization.
struct BnChannel {
  double gamma = 1.0;
  double beta = 0.0;
  double mean = 0.0;
  double var = 1.0;
  double eps = 1e-5;
};

/// Quantized ReLU with input scale: code = clamp(floor(v / scale), 0, 2^bits - 1).
struct ActParams {
  double scale = 1.0;
  int bits = 2;
};

enum class Direction : std::uint8_t { ascending = 0, descending = 1 };

/// Fused scale, batch-norm and 2-bit activation for one channel.
/// Ascending: code = #{j : acc >= t[j]}. Descending: code = #{j : acc <= t[j]}.
/// t is sorted non-decreasing in both cases.
struct ThresholdChannel {
  std::array<std::int64_t, 3> t{};
  Direction dir = Direction::ascending;
  /// Zero-slope channel; its constant code is encoded in sentinel thresholds.
  bool degenerate = false;

  std::uint8_t code(std::int64_t acc) const {
    int n = 0;
    if (dir == Direction::ascending) {
      for (std::int64_t v : t) n += acc >= v;
    } else {
      for (std::int64_t v : t) n += acc <= v;
    }
    return static_cast<std::uint8_t>(n);
  }

  bool operator==(const ThresholdChannel&) const = default;
};

struct ThresholdTable {
  std::vector<ThresholdChannel> channels;

  bool operator==(const ThresholdTable&) const = default;
};

struct BinarizedWeights {
  FloatTensor signs;          // +1 / -1, sign(0) = +1
  std::vector<double> alpha;  // mean |w| per output channel; 0 for an all-zero filter
};

/// Throws DomainError on non-finite weights (rejected by FloatTensor itself).
BinarizedWeights binarize_weights(const FloatTensor& w);

std::uint8_t quantize_act_float(double v, const ActParams& p);

/// Pre-activation v(acc) = gamma * (alpha * acc - mean) / sqrt(var + eps) + beta.
double bn_preactivation(double alpha, const BnChannel& bn, double acc);

/// Folds alpha, batch-norm and the activation into integer thresholds on the
/// accumulator. With `acc_bound` set, thresholds are clamped to
/// [-acc_bound - 1, acc_bound + 1], which preserves the counting result for
/// every |acc| <= acc_bound.
ThresholdChannel fuse_thresholds(double alpha, const BnChannel& bn, const ActParams& act,
                                 std::optional<std::int64_t> acc_bound = std::nullopt);

Act2Tensor apply_thresholds(const IntAccTensor& acc, const ThresholdTable& tbl);

/// Same codes as apply_thresholds, emitted directly in bitplane form.
PackedPlanes apply_thresholds_packed(const IntAccTensor& acc, const ThresholdTable& tbl);

}  // namespace ern::quant
