//
// Copyright 2026 The attnlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace attnlab {

// Seeded RNG with explicitly specified draw algorithms. std::shuffle and the
// std distributions are implementation-defined, so everything that must be
// reproducible across toolchains goes through this wrapper instead.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  /// Unbiased draw in [0, bound) via rejection sampling. bound must be > 0.
  uint64_t uniform_u64(uint64_t bound);

  /// 53-bit uniform double in [0, 1).
  double uniform01();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Fisher-Yates with this engine's draws.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_u64(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// k distinct values from [0, n), in ascending order.
  std::vector<int> sample_without_replacement(int n, int k);

  std::string serialize() const;
  void restore(const std::string& state);

 private:
  std::mt19937_64 eng_;
};

/// Stable sub-seed derivation so independent consumers (init, shuffling,
/// head selection, per-record poisoning) never share a stream.
uint64_t derive_seed(uint64_t base, std::string_view tag);
uint64_t derive_seed(uint64_t base, std::string_view tag, uint64_t index);

}  // namespace attnlab
