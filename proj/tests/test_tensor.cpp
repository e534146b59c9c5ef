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

#include <random>

#include "ern/error.hpp"
#include "ern/tensor.hpp"
#include "test_util.hpp"

using namespace ern;

TEST_SUITE("tensor") {
  TEST_CASE("pack_activations code table") {
    const Act2Tensor a({4, 1, 1}, {0, 1, 2, 3});
    const PackedPlanes p = pack_activations(a);
    REQUIRE(p.groups() == 1);
    CHECK(p.pixel(0, 0)[0] == 0b1100u);  // hi
    CHECK(p.pixel(0, 0)[1] == 0b1010u);  // lo
  }

  TEST_CASE("all-zero activations pack to zero planes") {
    const PackedPlanes p = pack_activations(Act2Tensor::zeros({130, 3, 2}));
    for (std::uint64_t w : p.words()) CHECK(w == 0u);
  }

  TEST_CASE("70 channels pad to 128 with zero lanes") {
    std::mt19937_64 rng(7);
    const Act2Tensor a = testing::random_codes(rng, {70, 3, 4});
    const PackedPlanes p = pack_activations(a);
    CHECK(p.padded_channels() == 128);
    for (std::size_t y = 0; y < 3; ++y)
      for (std::size_t x = 0; x < 4; ++x) {
        const auto px = p.pixel(y, x);
        CHECK((px[2] >> 6) == 0u);
        CHECK((px[3] >> 6) == 0u);
      }
    CHECK(unpack_activations(p, 70) == a);
  }

  TEST_CASE("unpack decodes 2*hi + lo") {
    const PackedPlanes p({2, 1, 1}, {0b11u, 0b01u});
    const Act2Tensor a = unpack_activations(p, 2);
    CHECK(a.at(0, 0, 0) == 3);
    CHECK(a.at(1, 0, 0) == 2);
  }

  TEST_CASE("pack/unpack round trip over random shapes") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
      const Dims3 d{1 + rng() % 200, 1 + rng() % 6, 1 + rng() % 6};
      const Act2Tensor a = testing::random_codes(rng, d);
      const PackedPlanes p = pack_activations(a);
      REQUIRE(unpack_activations(p, d.channels) == a);
      for (std::size_t c = 0; c < d.channels; ++c) {
        const std::size_t y = rng() % d.height;
        const std::size_t x = rng() % d.width;
        const auto px = p.pixel(y, x);
        const unsigned hi = (px[2 * (c / 64)] >> (c % 64)) & 1u;
        const unsigned lo = (px[2 * (c / 64) + 1] >> (c % 64)) & 1u;
        CHECK(a.at(c, y, x) == 2 * hi + lo);
      }
    }
  }

  TEST_CASE("unpack rejects more channels than padded") {
    const PackedPlanes p = pack_activations(Act2Tensor::zeros({3, 1, 1}));
    CHECK_THROWS_AS(unpack_activations(p, 65), ShapeError);
    CHECK_NOTHROW(unpack_activations(p, 64));
  }

  TEST_CASE("pack_weights sign bits, LSB first, pad lanes set") {
    const FloatTensor s({1, 3, 1, 1}, {1.0, -1.0, 1.0});
    const PackedWeights w = pack_weights(s, std::vector<double>{1.0});
    REQUIRE(w.bits.size() == 1);
    CHECK((w.bits[0] & 0b111u) == 0b101u);
    CHECK(w.bits[0] == ~std::uint64_t{0b010});
    CHECK(unpack_signs(w) == s);
  }

  TEST_CASE("all +1 weights pack to all-ones words") {
    const FloatTensor s = FloatTensor({2, 70, 3, 3}, std::vector<double>(2 * 70 * 9, 1.0));
    const PackedWeights w = pack_weights(s, std::vector<double>{1.0, 2.0});
    for (std::uint64_t b : w.bits) CHECK(b == ~std::uint64_t{0});
    CHECK(w.words_per_filter() == 18);
  }

  TEST_CASE("pack_weights rejects bad input") {
    CHECK_THROWS_AS(pack_weights(FloatTensor({1, 2, 1, 1}, {1.0, 0.5}), std::vector<double>{1.0}), DomainError);
    CHECK_THROWS_AS(pack_weights(FloatTensor({1, 1, 1, 1}, {1.0}), std::vector<double>{0.0}), DomainError);
    CHECK_THROWS_AS(pack_weights(FloatTensor({2, 1, 1, 1}, {1.0, 1.0}), std::vector<double>{1.0}), ShapeError);
  }

  TEST_CASE("random weight round trip and sign accessor") {
    std::mt19937_64 rng(3);
    const FloatTensor s = testing::random_signs(rng, 5, 130, 3, 3);
    const PackedWeights w = pack_weights(s, std::vector<double>(5, 0.5), true);
    CHECK(w.const_scaled);
    CHECK(unpack_signs(w) == s);
    for (int t = 0; t < 100; ++t) {
      const std::size_t o = rng() % 5, c = rng() % 130, i = rng() % 3, j = rng() % 3;
      CHECK(w.sign(o, c, i, j) == static_cast<int>(s.at(o, c, i, j)));
    }
  }

  TEST_CASE("tensor invariants are enforced") {
    CHECK_THROWS_AS(Act2Tensor({1, 1, 1}, {4}), DomainError);
    CHECK_THROWS_AS(Act2Tensor({0, 1, 1}, {}), ShapeError);
    CHECK_THROWS_AS(FloatTensor({1, 1, 1}, {std::numeric_limits<double>::quiet_NaN()}), DomainError);
    CHECK_THROWS_AS(FloatTensor({1, 1, 1}, {std::numeric_limits<double>::infinity()}), DomainError);
    CHECK_THROWS_AS(FloatTensor({2, 1, 1}, {1.0}), ShapeError);
    CHECK_THROWS_AS(IntAccTensor({1, 0, 2}, {}), ShapeError);
  }
}
