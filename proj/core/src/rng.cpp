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

#include "attnlab/rng.hpp"

#include <algorithm>
#include <sstream>

#include "attnlab/errors.hpp"

namespace attnlab {

uint64_t Rng::uniform_u64(uint64_t bound) {
  if (bound == 0) throw ContractError("Rng::uniform_u64: bound must be > 0");
  // Rejection sampling over the largest multiple of bound.
  const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t x;
  do {
    x = eng_();
  } while (x >= limit);
  return x % bound;
}

double Rng::uniform01() {
  return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

std::vector<int> Rng::sample_without_replacement(int n, int k) {
  if (k < 0 || k > n) throw ContractError("sample_without_replacement: k out of range");
  std::vector<int> pool(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) pool[static_cast<size_t>(i)] = i;
  // Partial Fisher-Yates: fix the first k slots.
  for (int i = 0; i < k; ++i) {
    size_t j = static_cast<size_t>(i) +
               static_cast<size_t>(uniform_u64(static_cast<uint64_t>(n - i)));
    std::swap(pool[static_cast<size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<size_t>(k));
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::string Rng::serialize() const {
  std::ostringstream os;
  os << eng_;
  return os.str();
}

void Rng::restore(const std::string& state) {
  std::istringstream is(state);
  is >> eng_;
  if (!is) throw ContractError("Rng::restore: malformed engine state");
}

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

uint64_t derive_seed(uint64_t base, std::string_view tag) {
  return splitmix64(base ^ fnv1a(tag));
}

uint64_t derive_seed(uint64_t base, std::string_view tag, uint64_t index) {
  return splitmix64(derive_seed(base, tag) ^ splitmix64(index));
}

}  // namespace attnlab
