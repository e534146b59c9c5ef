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
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "ern/tensor.hpp"

namespace ern::testing {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("ern_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Act2Tensor random_codes(std::mt19937_64& rng, Dims3 d) {
  std::vector<std::uint8_t> codes(d.size());
  for (auto& c : codes) c = static_cast<std::uint8_t>(rng() & 3u);
  return Act2Tensor(d, std::move(codes));
}

inline FloatTensor random_signs(std::mt19937_64& rng, std::size_t oc, std::size_t ic, std::size_t kh, std::size_t kw) {
  std::vector<double> v(oc * ic * kh * kw);
  for (auto& s : v) s = (rng() & 1u) ? 1.0 : -1.0;
  return FloatTensor({oc, ic, kh, kw}, std::move(v));
}

inline PackedWeights random_weights(std::mt19937_64& rng, std::size_t oc, std::size_t ic, std::size_t kh,
                                    std::size_t kw) {
  return pack_weights(random_signs(rng, oc, ic, kh, kw), std::vector<double>(oc, 1.0));
}

}  // namespace ern::testing
