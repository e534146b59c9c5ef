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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ern/tensor.hpp"

namespace ern::image {

/// Binary PPM (P6, maxval 255), with '#' comments in the header. Returns a
/// planar (3, H, W) image. Throws InputError on anything else.
ImageU8 parse_ppm(std::span<const std::uint8_t> bytes);
ImageU8 read_ppm(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_ppm(const ImageU8& img);
void write_ppm(const ImageU8& img, const std::filesystem::path& path);

/// Planar CHW uint8 dump of a 3-channel image.
ImageU8 read_raw(const std::filesystem::path& path, std::size_t height, std::size_t width);

/// Throws ShapeError when the window leaves the image.
ImageU8 crop(const ImageU8& img, std::size_t y, std::size_t x, std::size_t height, std::size_t width);
ImageU8 mirror(const ImageU8& img);
/// Four corner crops, the center crop, then the mirror of each.
std::vector<ImageU8> ten_crops(const ImageU8& img, std::size_t size);

ImageU8 random_image(std::uint64_t seed, std::size_t height, std::size_t width);
ImageU8 constant_image(std::uint8_t r, std::uint8_t g, std::uint8_t b, std::size_t height, std::size_t width);

std::vector<double> softmax(std::span<const double> logits);

}  // namespace ern::image
