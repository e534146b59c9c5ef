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

#include "ern/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

#include "ern/error.hpp"

namespace ern::image {

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> b) : b_(b) {}

  std::size_t number() {
    skip_space();
    std::size_t v = 0;
    std::size_t digits = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_++] - '0');
      if (++digits > 9) throw InputError("PPM header value too large");
    }
    if (digits == 0) throw InputError("malformed PPM header");
    return v;
  }
  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= b_.size() || !std::isspace(b_[pos_])) throw InputError("malformed PPM header");
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < b_.size()) {
      if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(b_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 2;
};

}  // namespace

ImageU8 parse_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw InputError("not a binary PPM (P6) image");
  HeaderReader h(bytes);
  const std::size_t width = h.number();
  const std::size_t height = h.number();
  const std::size_t maxval = h.number();
  if (maxval != 255) throw InputError("only PPM maxval 255 is supported");
  if (width == 0 || height == 0) throw InputError("PPM image is empty");
  const std::size_t start = h.raster_start();
  const std::size_t n = width * height * 3;
  if (bytes.size() - start < n) throw InputError("PPM raster is truncated");
  ImageU8 img{Dims3{3, height, width}, std::vector<std::uint8_t>(n)};
  const std::size_t plane = width * height;
  for (std::size_t p = 0; p < plane; ++p)
    for (std::size_t c = 0; c < 3; ++c) img.pixels[c * plane + p] = bytes[start + p * 3 + c];
  return img;
}

ImageU8 read_ppm(const std::filesystem::path& path) { return parse_ppm(slurp(path)); }

std::vector<std::uint8_t> encode_ppm(const ImageU8& img) {
  if (img.dims.channels != 3) throw ShapeError("PPM images have 3 channels");
  const std::string header =
      "P6\n" + std::to_string(img.dims.width) + " " + std::to_string(img.dims.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const std::size_t plane = img.dims.plane();
  for (std::size_t p = 0; p < plane; ++p)
    for (std::size_t c = 0; c < 3; ++c) out.push_back(img.pixels[c * plane + p]);
  return out;
}

void write_ppm(const ImageU8& img, const std::filesystem::path& path) {
  const auto bytes = encode_ppm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("cannot write '" + path.string() + "'");
}

ImageU8 read_raw(const std::filesystem::path& path, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw InputError("raw image dims must be >= 1");
  std::vector<std::uint8_t> bytes = slurp(path);
  if (bytes.size() != 3 * height * width)
    throw InputError("raw image has " + std::to_string(bytes.size()) + " bytes, expected " +
                     std::to_string(3 * height * width));
  return ImageU8{Dims3{3, height, width}, std::move(bytes)};
}

ImageU8 crop(const ImageU8& img, std::size_t y, std::size_t x, std::size_t height, std::size_t width) {
  const Dims3& d = img.dims;
  if (height == 0 || width == 0 || y + height > d.height || x + width > d.width)
    throw ShapeError("crop window leaves the image");
  ImageU8 out{Dims3{d.channels, height, width}, std::vector<std::uint8_t>(d.channels * height * width)};
  for (std::size_t c = 0; c < d.channels; ++c)
    for (std::size_t r = 0; r < height; ++r)
      std::copy_n(img.pixels.begin() + static_cast<std::ptrdiff_t>((c * d.height + y + r) * d.width + x), width,
                  out.pixels.begin() + static_cast<std::ptrdiff_t>((c * height + r) * width));
  return out;
}

ImageU8 mirror(const ImageU8& img) {
  ImageU8 out = img;
  const std::size_t w = img.dims.width;
  for (std::size_t row = 0; row < img.dims.channels * img.dims.height; ++row)
    std::reverse(out.pixels.begin() + static_cast<std::ptrdiff_t>(row * w),
                 out.pixels.begin() + static_cast<std::ptrdiff_t>((row + 1) * w));
  return out;
}

std::vector<ImageU8> ten_crops(const ImageU8& img, std::size_t size) {
  const std::size_t h = img.dims.height;
  const std::size_t w = img.dims.width;
  if (size == 0 || size > h || size > w) throw ShapeError("crop size exceeds the image");
  std::vector<ImageU8> out;
  out.push_back(crop(img, 0, 0, size, size));
  out.push_back(crop(img, 0, w - size, size, size));
  out.push_back(crop(img, h - size, 0, size, size));
  out.push_back(crop(img, h - size, w - size, size, size));
  out.push_back(crop(img, (h - size) / 2, (w - size) / 2, size, size));
  for (std::size_t i = 0; i < 5; ++i) out.push_back(mirror(out[i]));
  return out;
}

ImageU8 random_image(std::uint64_t seed, std::size_t height, std::size_t width) {
  std::mt19937_64 gen(seed);
  ImageU8 img{Dims3{3, height, width}, std::vector<std::uint8_t>(3 * height * width)};
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(gen() >> 56);
  return img;
}

ImageU8 constant_image(std::uint8_t r, std::uint8_t g, std::uint8_t b, std::size_t height, std::size_t width) {
  ImageU8 img{Dims3{3, height, width}, std::vector<std::uint8_t>(3 * height * width)};
  const std::size_t plane = height * width;
  std::fill_n(img.pixels.begin(), plane, r);
  std::fill_n(img.pixels.begin() + static_cast<std::ptrdiff_t>(plane), plane, g);
  std::fill_n(img.pixels.begin() + static_cast<std::ptrdiff_t>(2 * plane), plane, b);
  return img;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += p[i] = std::exp(logits[i] - m);
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace ern::image
