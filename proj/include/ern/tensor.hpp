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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ern {

/// Channels are packed this many per machine word.
inline constexpr std::size_t kLanes = 64;

constexpr std::size_t padded_channels(std::size_t c) { return (c + kLanes - 1) / kLanes * kLanes; }
constexpr std::size_t words_for(std::size_t c) { return (c + kLanes - 1) / kLanes; }

/// (channels, height, width); channel-major, row-major within a plane.
struct Dims3 {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t plane() const { return height * width; }
  std::size_t size() const { return channels * height * width; }
  bool operator==(const Dims3&) const = default;
};

/// Dense 64-bit real tensor of rank 3 (C,H,W) or 4 (OC,IC,KH,KW). Elements are finite.
class FloatTensor {
 public:
  FloatTensor() = default;
  FloatTensor(std::vector<std::size_t> shape, std::vector<double> data);
  static FloatTensor zeros(std::vector<std::size_t> shape);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::span<const double> data() const { return data_; }

  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }
  double at(std::size_t o, std::size_t c, std::size_t i, std::size_t j) const {
    return data_[((o * shape_[1] + c) * shape_[2] + i) * shape_[3] + j];
  }

  bool operator==(const FloatTensor&) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// 2-bit activation map; one byte per code in {0,1,2,3}.
class Act2Tensor {
 public:
  Act2Tensor() = default;
  Act2Tensor(Dims3 dims, std::vector<std::uint8_t> codes);
  static Act2Tensor zeros(Dims3 dims);

  const Dims3& dims() const { return dims_; }
  std::span<const std::uint8_t> codes() const { return codes_; }
  std::uint8_t at(std::size_t c, std::size_t y, std::size_t x) const {
    return codes_[(c * dims_.height + y) * dims_.width + x];
  }

  bool operator==(const Act2Tensor&) const = default;

 private:
  Dims3 dims_;
  std::vector<std::uint8_t> codes_;
};

/// Two-bitplane form of an Act2Tensor. Per pixel, for each 64-channel word
/// group g, the hi word and the lo word are stored adjacently:
/// words[((y * W + x) * groups + g) * 2 + {0 = hi, 1 = lo}].
/// Bit j of group g is channel 64*g + j. Pad lanes are zero in both planes.
class PackedPlanes {
 public:
  PackedPlanes() = default;
  PackedPlanes(Dims3 dims, std::vector<std::uint64_t> words);

  /// Logical (unpadded) dims.
  const Dims3& dims() const { return dims_; }
  std::size_t padded_channels() const { return groups_ * kLanes; }
  std::size_t groups() const { return groups_; }
  std::span<const std::uint64_t> words() const { return words_; }
  /// The 2*groups interleaved words of one pixel.
  std::span<const std::uint64_t> pixel(std::size_t y, std::size_t x) const {
    return {words_.data() + (y * dims_.width + x) * groups_ * 2, groups_ * 2};
  }

  bool operator==(const PackedPlanes&) const = default;

 private:
  Dims3 dims_;
  std::size_t groups_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Binary convolution weights. Bit 1 is +1 and bit 0 is -1; layout
/// bits[((o * kh + i) * kw + j) * groups + g]. Pad-lane bits are 1.
struct PackedWeights {
  std::size_t out_ch = 0;
  std::size_t in_ch = 0;
  std::size_t kh = 0;
  std::size_t kw = 0;
  std::vector<std::uint64_t> bits;
  /// Per output channel scale. Empty once the scale has been folded into
  /// downstream thresholds by the compiler.
  std::vector<double> alpha;
  bool const_scaled = false;

  std::size_t groups() const { return words_for(in_ch); }
  std::size_t words_per_filter() const { return kh * kw * groups(); }
  std::span<const std::uint64_t> filter(std::size_t o) const {
    return {bits.data() + o * words_per_filter(), words_per_filter()};
  }
  /// +1 or -1.
  int sign(std::size_t o, std::size_t c, std::size_t i, std::size_t j) const {
    const std::uint64_t w = bits[((o * kh + i) * kw + j) * groups() + c / kLanes];
    return ((w >> (c % kLanes)) & 1u) ? 1 : -1;
  }

  bool operator==(const PackedWeights&) const = default;
};

/// Signed 32-bit accumulator map.
class IntAccTensor {
 public:
  IntAccTensor() = default;
  IntAccTensor(Dims3 dims, std::vector<std::int32_t> values);

  const Dims3& dims() const { return dims_; }
  std::span<const std::int32_t> values() const { return values_; }
  std::int32_t at(std::size_t c, std::size_t y, std::size_t x) const {
    return values_[(c * dims_.height + y) * dims_.width + x];
  }
  std::span<const std::int32_t> channel(std::size_t c) const {
    return {values_.data() + c * dims_.plane(), dims_.plane()};
  }

  bool operator==(const IntAccTensor&) const = default;

 private:
  Dims3 dims_;
  std::vector<std::int32_t> values_;
};

/// 8-bit image, (3, H, W) for RGB.
struct ImageU8 {
  Dims3 dims;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t c, std::size_t y, std::size_t x) const {
    return pixels[(c * dims.height + y) * dims.width + x];
  }
  bool operator==(const ImageU8&) const = default;
};

PackedPlanes pack_activations(const Act2Tensor& a);

/// Throws ShapeError when `channels` exceeds the padded channel count.
Act2Tensor unpack_activations(const PackedPlanes& p, std::size_t channels);

/// `signs` is (OC, IC, KH, KW) with every element exactly +1 or -1.
PackedWeights pack_weights(const FloatTensor& signs, std::span<const double> alpha,
                           bool const_scaled = false);

/// Inverse of pack_weights' sign encoding, as a +/-1 real tensor.
FloatTensor unpack_signs(const PackedWeights& w);

}  // namespace ern
