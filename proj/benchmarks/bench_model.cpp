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

#include <benchmark/benchmark.h>

#include "attnlab/model.hpp"
#include "attnlab/ops.hpp"
#include "attnlab/rng.hpp"

namespace {

attnlab::EncoderConfig toy_config() {
  attnlab::EncoderConfig cfg;
  cfg.vocab_size = 64;
  return cfg;
}

std::vector<int> probe_ids(int n, const attnlab::EncoderConfig& cfg) {
  attnlab::Rng rng(17);
  std::vector<int> ids(static_cast<size_t>(n));
  ids.front() = attnlab::kClsId;
  ids.back() = attnlab::kSepId;
  for (int i = 1; i + 1 < n; ++i) {
    ids[static_cast<size_t>(i)] = attnlab::kNumReserved +
                                  static_cast<int>(rng.uniform_u64(
                                      static_cast<uint64_t>(cfg.vocab_size - attnlab::kNumReserved)));
  }
  return ids;
}

void BM_encoder_forward(benchmark::State& state) {
  const auto cfg = toy_config();
  const auto params = attnlab::init_parameters(cfg, 42);
  const auto ids = probe_ids(static_cast<int>(state.range(0)), cfg);
  attnlab::NoGradGuard ng;
  for (auto _ : state) {
    benchmark::DoNotOptimize(attnlab::encoder_forward(params, cfg, ids, false));
  }
}
BENCHMARK(BM_encoder_forward)->Arg(8)->Arg(16)->Arg(32);

void BM_encoder_train_step(benchmark::State& state) {
  const auto cfg = toy_config();
  auto params = attnlab::init_parameters(cfg, 42);
  const auto ids = probe_ids(static_cast<int>(state.range(0)), cfg);
  for (auto _ : state) {
    params.zero_grads();
    auto fw = attnlab::encoder_forward(params, cfg, ids, true);
    auto loss = attnlab::cross_entropy(fw.logits, 1);
    attnlab::backward(loss);
    benchmark::DoNotOptimize(loss.item());
  }
}
BENCHMARK(BM_encoder_train_step)->Arg(8)->Arg(16)->Arg(32);

}  // namespace
