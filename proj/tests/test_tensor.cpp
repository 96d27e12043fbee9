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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "attnlab/errors.hpp"
#include "attnlab/ops.hpp"
#include "attnlab/rng.hpp"
#include "attnlab/tensor.hpp"
#include "support/fd_check.hpp"

using namespace attnlab;

TEST_CASE("softmax of a constant row is uniform") {
  Tensor x = Tensor::from({1, 3}, {0.0, 0.0, 0.0});
  Tensor y = softmax_rows(x);
  for (int j = 0; j < 3; ++j) CHECK(y.at(j) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax is shift invariant under large inputs") {
  Tensor x = Tensor::from({1, 2}, {1000.0, 1000.0});
  Tensor y = softmax_rows(x);
  CHECK(y.at(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(y.at(1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("softmax of [ln 2, 0] is [2/3, 1/3]") {
  Tensor x = Tensor::from({1, 2}, {std::log(2.0), 0.0});
  Tensor y = softmax_rows(x);
  CHECK(y.at(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(y.at(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one over random inputs") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_u64(6));
    const int m = 1 + static_cast<int>(rng.uniform_u64(8));
    std::vector<double> v(static_cast<size_t>(n * m));
    for (double& x : v) x = rng.uniform(-50.0, 50.0);
    Tensor y = softmax_rows(Tensor::from({n, m}, std::move(v)));
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < m; ++j) s += y.at(static_cast<size_t>(i * m + j));
      CHECK(std::abs(s - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("softmax rejects non-finite input") {
  Tensor x = Tensor::from({1, 2}, {1.0, std::numeric_limits<double>::infinity()});
  CHECK_THROWS_AS(softmax_rows(x), NumericError);
  Tensor y = Tensor::from({1, 2}, {std::nan(""), 0.0});
  CHECK_THROWS_AS(softmax_rows(y), NumericError);
}

TEST_CASE("backward requires a scalar loss") {
  Tensor x = Tensor::from({1, 2}, {1.0, 2.0}, true);
  Tensor y = softmax_rows(x);
  CHECK_THROWS_AS(backward(y), ContractError);
}

TEST_CASE("gradient of sum(softmax(x)) vanishes") {
  Tensor x = Tensor::from({2, 3}, {0.3, -1.2, 2.0, 0.0, 0.5, -0.4}, true);
  Tensor loss = sum(softmax_rows(x));
  backward(loss);
  for (double g : x.grad()) CHECK(std::abs(g) < 1e-12);
}

TEST_CASE("cross entropy gradient is softmax minus one-hot") {
  Tensor logits = Tensor::from({1, 4}, {0.2, -0.7, 1.3, 0.1}, true);
  const int target = 2;
  backward(cross_entropy(logits, target));

  double mx = -1e300, z = 0.0;
  for (double v : logits.values()) mx = std::max(mx, v);
  for (double v : logits.values()) z += std::exp(v - mx);
  for (int j = 0; j < 4; ++j) {
    const double soft = std::exp(logits.at(static_cast<size_t>(j)) - mx) / z;
    const double expected = soft - (j == target ? 1.0 : 0.0);
    CHECK(logits.grad()[static_cast<size_t>(j)] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("matmul by the identity is the identity map") {
  Tensor eye = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tensor m = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6});
  Tensor out = matmul(eye, m);
  for (size_t i = 0; i < m.numel(); ++i) CHECK(out.at(i) == m.at(i));
}

TEST_CASE("matmul rejects mismatched inner extents") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({2, 2});
  CHECK_THROWS_AS(matmul(a, b), ContractError);
  CHECK_THROWS_AS(add(a, b), ContractError);
}

TEST_CASE("cross entropy of uniform logits is ln C") {
  for (int c : {2, 3, 7}) {
    Tensor logits = Tensor::zeros({1, c});
    CHECK(cross_entropy(logits, 0).item() == doctest::Approx(std::log(c)).epsilon(1e-12));
  }
}

TEST_CASE("layer_norm maps a constant row to zero before the affine part") {
  Tensor x = Tensor::from({1, 4}, {3.5, 3.5, 3.5, 3.5});
  Tensor gamma = Tensor::full({4}, 1.0);
  Tensor beta = Tensor::zeros({4});
  Tensor y = layer_norm(x, gamma, beta);
  for (double v : y.values()) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("embedding_gather validates ids") {
  Tensor table = Tensor::zeros({4, 2});
  CHECK_THROWS_AS(embedding_gather(table, {4}), ContractError);
  CHECK_THROWS_AS(embedding_gather(table, {-1}), ContractError);
}

TEST_CASE("trigger_column_mass merges span rows and columns") {
  // 3x3 with all attention on column 1.
  Tensor a = Tensor::from({3, 3}, {0, 1, 0, 0, 1, 0, 0, 1, 0});
  CHECK(trigger_column_mass(a, 1, 2).item() == doctest::Approx(1.0));
  // Uniform 3x3, single-token span: mass 1/3.
  Tensor u = Tensor::full({3, 3}, 1.0 / 3.0);
  CHECK(trigger_column_mass(u, 1, 2).item() == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("backward is deterministic over an identical tape") {
  auto run = [] {
    Rng rng(99);
    std::vector<Tensor> leaves{attnlab::testing::random_tensor({3, 3}, rng),
                               attnlab::testing::random_tensor({3, 3}, rng)};
    Tensor attn = softmax_rows(matmul(leaves[0], leaves[1]));
    Tensor loss = scale(trigger_column_mass(attn, 1, 2), -1.0);
    backward(loss);
    std::vector<double> grads;
    for (const Tensor& l : leaves) grads.insert(grads.end(), l.grad().begin(), l.grad().end());
    return grads;
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("autodiff matches central finite differences on randomized graphs") {
  int checked = 0;
  for (int trial = 0; trial < 120; ++trial) {
    auto report = attnlab::testing::random_graph_fd_check(1000 + trial, trial);
    INFO("trial ", trial, " worst ", report.worst_rel, " at ", report.worst_where);
    CHECK(report.ok(1e-4));
    checked += static_cast<int>(report.checked);
  }
  CHECK(checked > 1000);
}
