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

#include "attnlab/ops.hpp"
#include "attnlab/rng.hpp"
#include "attnlab/tensor.hpp"

namespace {

attnlab::Tensor random_matrix(int rows, int cols, attnlab::Rng& rng, bool grad = false) {
  std::vector<double> v(static_cast<size_t>(rows) * cols);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return attnlab::Tensor::from({rows, cols}, std::move(v), grad);
}

void BM_matmul(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  attnlab::Rng rng(1);
  attnlab::NoGradGuard ng;
  auto a = random_matrix(n, n, rng);
  auto b = random_matrix(n, n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(attnlab::matmul(a, b));
  }
  state.SetItemsProcessed(state.iterations() * 2L * n * n * n);
}
BENCHMARK(BM_matmul)->Arg(16)->Arg(32)->Arg(64);

void BM_softmax_rows(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  attnlab::Rng rng(2);
  attnlab::NoGradGuard ng;
  auto x = random_matrix(n, n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(attnlab::softmax_rows(x));
  }
}
BENCHMARK(BM_softmax_rows)->Arg(16)->Arg(32);

void BM_attention_block_backward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int d = 32;
  attnlab::Rng rng(3);
  auto x = random_matrix(n, d, rng, true);
  auto wq = random_matrix(d, d, rng, true);
  auto wk = random_matrix(d, d, rng, true);
  auto wv = random_matrix(d, d, rng, true);
  for (auto _ : state) {
    x.zero_grad();
    wq.zero_grad();
    wk.zero_grad();
    wv.zero_grad();
    auto attn = attnlab::softmax_rows(
        attnlab::scale(attnlab::matmul_nt(attnlab::matmul(x, wq), attnlab::matmul(x, wk)),
                       1.0 / std::sqrt(static_cast<double>(d))));
    auto loss = attnlab::mean(attnlab::matmul(attn, attnlab::matmul(x, wv)));
    attnlab::backward(loss);
    benchmark::DoNotOptimize(loss.item());
  }
}
BENCHMARK(BM_attention_block_backward)->Arg(12)->Arg(32);

}  // namespace
