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

#include <doctest.h>

#include <algorithm>
#include <set>

#include "ern/error.hpp"
#include "ern/pixembed.hpp"

using namespace ern;

namespace {

// floor(w_i x + b_i) with w_i = 1/(sk), b_i = 1 - (i+1)/k, in integers.
int thermo_code(int x, int i, int k, int s) {
  const int v = (x + s * (k - i - 1)) / (s * k);
  return std::clamp(v, 0, 3);
}

}  // namespace

TEST_SUITE("pixembed") {
  TEST_CASE("parameters") {
    const auto p2 = pixembed::thermo_params(2, 2);
    CHECK(p2.s == 42);
    CHECK(p2.w[0] == doctest::Approx(1.0 / 84));
    CHECK(p2.b[0] == 0.5);
    CHECK(p2.b[1] == 0.0);
    const auto p10 = pixembed::thermo_params(10, 2);
    CHECK(p10.s == 8);
    CHECK(p10.w[3] == doctest::Approx(1.0 / 80));
    CHECK(p10.b[4] == doctest::Approx(0.5));
    CHECK(pixembed::thermo_params(256, 2).s == 1);
    CHECK_THROWS_AS(pixembed::thermo_params(0, 2), DomainError);
    CHECK_THROWS_AS(pixembed::thermo_params(2, 0), DomainError);
    CHECK_THROWS_AS(pixembed::thermo_params(2, 9), DomainError);
  }

  TEST_CASE("matches the integer formula for every input, k = 1..32") {
    for (int k = 1; k <= 32; ++k) {
      const auto p = pixembed::thermo_params(k, 2);
      for (int x = 0; x < 256; ++x) {
        const auto z = pixembed::encode_pixel(static_cast<std::uint8_t>(x), p);
        REQUIRE(z.size() == static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) REQUIRE(z[i] == thermo_code(x, i, k, p.s));
      }
    }
  }

  TEST_CASE("k=2 sweep gives seven ordered codes") {
    const auto p = pixembed::thermo_params(2, 2);
    std::vector<std::vector<std::uint8_t>> seen;
    std::vector<int> transitions;
    for (int x = 0; x < 256; ++x) {
      auto z = pixembed::encode_pixel(static_cast<std::uint8_t>(x), p);
      if (seen.empty() || seen.back() != z) {
        if (!seen.empty()) transitions.push_back(x);
        seen.push_back(z);
      }
    }
    const std::vector<std::vector<std::uint8_t>> want{{0, 0}, {1, 0}, {1, 1}, {2, 1}, {2, 2}, {3, 2}, {3, 3}};
    CHECK(seen == want);
    CHECK(transitions == std::vector<int>{42, 84, 126, 168, 210, 252});
    CHECK(pixembed::encode_pixel(100, p) == std::vector<std::uint8_t>{1, 1});
  }

  TEST_CASE("endpoints") {
    for (int k : {1, 2, 10, 32}) {
      const auto z = pixembed::encode_pixel(0, pixembed::thermo_params(k, 2));
      CHECK(std::all_of(z.begin(), z.end(), [](auto v) { return v == 0; }));
    }
    const auto z = pixembed::encode_pixel(255, pixembed::thermo_params(10, 2));
    CHECK(std::all_of(z.begin(), z.end(), [](auto v) { return v == 3; }));
  }

  TEST_CASE("monotone, totally ordered and surjective onto 3k+1 levels") {
    for (int k = 1; k <= 32; ++k) {
      const auto p = pixembed::thermo_params(k, 2);
      std::set<std::vector<std::uint8_t>> distinct;
      auto prev = pixembed::encode_pixel(0, p);
      distinct.insert(prev);
      for (int x = 1; x < 256; ++x) {
        const auto z = pixembed::encode_pixel(static_cast<std::uint8_t>(x), p);
        for (int i = 0; i < k; ++i) REQUIRE(prev[i] <= z[i]);
        distinct.insert(z);
        prev = z;
      }
      if (p.s * 3 * k <= 256) CHECK(distinct.size() == static_cast<std::size_t>(3 * k + 1));
    }
  }

  TEST_CASE("encode_image is color-major and 3k wide") {
    ImageU8 img{{3, 8, 8}, std::vector<std::uint8_t>(192)};
    for (std::size_t n = 0; n < img.pixels.size(); ++n) img.pixels[n] = static_cast<std::uint8_t>(n * 37);
    const auto p = pixembed::thermo_params(10, 2);
    const Act2Tensor a = pixembed::encode_image(img, p);
    CHECK(a.dims() == Dims3{30, 8, 8});
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t x = 0; x < 8; ++x) {
          const auto z = pixembed::encode_pixel(img.at(c, y, x), p);
          for (std::size_t i = 0; i < 10; ++i) REQUIRE(a.at(c * 10 + i, y, x) == z[i]);
        }
    const ImageU8 zero{{3, 4, 4}, std::vector<std::uint8_t>(48, 0)};
    const auto za = pixembed::encode_image(zero, p);
    CHECK(std::all_of(za.codes().begin(), za.codes().end(), [](auto v) { return v == 0; }));
    const ImageU8 one{{3, 1, 1}, {100, 0, 255}};
    const auto oa = pixembed::encode_image(one, pixembed::thermo_params(2, 2));
    CHECK(oa.at(0, 0, 0) == 1);
    CHECK(oa.at(1, 0, 0) == 1);
    CHECK(oa.at(4, 0, 0) == 3);
  }

  TEST_CASE("encode_image rejects non-RGB input") {
    const ImageU8 gray{{1, 2, 2}, std::vector<std::uint8_t>(4)};
    CHECK_THROWS_AS(pixembed::encode_image(gray, pixembed::thermo_params(2, 2)), ShapeError);
  }
}
