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

// Central-finite-difference gradient oracle for randomized small graphs.
// The oracle re-evaluates the forward builder under perturbed leaves and
// never touches the reverse-mode path it is checking.

#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "attnlab/ops.hpp"
#include "attnlab/rng.hpp"
#include "attnlab/tensor.hpp"

namespace attnlab::testing {

struct FdReport {
  size_t checked = 0;
  double worst_rel = 0.0;
  std::string worst_where;
  bool ok(double tol) const { return worst_rel < tol; }
};

/// Builder maps the current leaf values to a scalar loss tensor.
using GraphBuilder = std::function<Tensor(std::vector<Tensor>&)>;

inline FdReport fd_check(std::vector<Tensor>& leaves, const GraphBuilder& build,
                         double h = 1e-5) {
  for (Tensor& leaf : leaves) leaf.zero_grad();
  Tensor loss = build(leaves);
  backward(loss);

  FdReport report;
  for (size_t li = 0; li < leaves.size(); ++li) {
    Tensor& leaf = leaves[li];
    if (!leaf.requires_grad()) continue;
    leaf.ensure_grad();
    auto grad = leaf.grad();
    auto vals = leaf.mutable_values();
    for (size_t i = 0; i < vals.size(); ++i) {
      const double saved = vals[i];
      double f_plus, f_minus;
      {
        NoGradGuard ng;
        vals[i] = saved + h;
        f_plus = build(leaves).item();
        vals[i] = saved - h;
        f_minus = build(leaves).item();
        vals[i] = saved;
      }
      const double fd = (f_plus - f_minus) / (2.0 * h);
      const double ad = grad[i];
      const double rel = std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), 1e-3});
      ++report.checked;
      if (rel > report.worst_rel) {
        report.worst_rel = rel;
        report.worst_where = "leaf " + std::to_string(li) + " index " + std::to_string(i);
      }
    }
  }
  return report;
}

inline Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0,
                            bool requires_grad = true) {
  const size_t n = checked_numel(shape);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

// One randomized graph exercising every kernel family. `variant` picks the
// topology, the rng picks shapes and values; total parameters stay under a
// couple hundred.
inline FdReport random_graph_fd_check(uint64_t seed, int variant) {
  Rng rng(seed);
  std::vector<Tensor> leaves;

  switch (variant % 4) {
    case 0: {
      // Feed-forward block: gather -> layer_norm -> linear -> gelu -> linear -> CE.
      const int v = 5 + static_cast<int>(rng.uniform_u64(4));
      const int d = 2 + static_cast<int>(rng.uniform_u64(3));
      const int dff = 2 + static_cast<int>(rng.uniform_u64(3));
      const int c = 2 + static_cast<int>(rng.uniform_u64(2));
      const int n = 2 + static_cast<int>(rng.uniform_u64(3));
      std::vector<int> ids(static_cast<size_t>(n));
      for (int& id : ids) id = static_cast<int>(rng.uniform_u64(static_cast<uint64_t>(v)));
      const int target = static_cast<int>(rng.uniform_u64(static_cast<uint64_t>(c)));
      leaves = {random_tensor({v, d}, rng),    random_tensor({d}, rng),
                random_tensor({d}, rng),       random_tensor({d, dff}, rng),
                random_tensor({dff}, rng),     random_tensor({dff, c}, rng),
                random_tensor({c}, rng)};
      return fd_check(leaves, [ids, target](std::vector<Tensor>& t) {
        Tensor x = layer_norm(embedding_gather(t[0], ids), t[1], t[2]);
        Tensor hidden = gelu(add_row_broadcast(matmul(x, t[3]), t[4]));
        Tensor logits = pick_row(add_row_broadcast(matmul(hidden, t[5]), t[6]), 0);
        return cross_entropy(logits, target);
      });
    }
    case 1: {
      // Single-head attention: matmul_nt -> scale -> softmax -> matmul -> CE.
      const int n = 3 + static_cast<int>(rng.uniform_u64(3));
      const int d = 2 + static_cast<int>(rng.uniform_u64(3));
      const int c = 2;
      const int target = static_cast<int>(rng.uniform_u64(c));
      leaves = {random_tensor({n, d}, rng), random_tensor({d, d}, rng),
                random_tensor({d, d}, rng), random_tensor({d, d}, rng),
                random_tensor({d, c}, rng)};
      const double inv = 1.0 / std::sqrt(static_cast<double>(d));
      return fd_check(leaves, [target, inv](std::vector<Tensor>& t) {
        Tensor q = matmul(t[0], t[1]);
        Tensor k = matmul(t[0], t[2]);
        Tensor vv = matmul(t[0], t[3]);
        Tensor attn = softmax_rows(scale(matmul_nt(q, k), inv));
        Tensor ctx = matmul(attn, vv);
        return cross_entropy(pick_row(matmul(ctx, t[4]), 0), target);
      });
    }
    case 2: {
      // Trigger-mass path: softmax -> trigger_column_mass with a cap.
      const int n = 4 + static_cast<int>(rng.uniform_u64(3));
      const int begin = 1 + static_cast<int>(rng.uniform_u64(2));
      const int end = std::min(begin + 1 + static_cast<int>(rng.uniform_u64(2)), n);
      leaves = {random_tensor({n, n}, rng, 2.0)};
      // Keep the cap kink away from the operating point so the central
      // difference stays valid on both the active and inactive side.
      double mass0;
      {
        NoGradGuard ng;
        mass0 = trigger_column_mass(softmax_rows(leaves[0]), begin, end).item();
      }
      const double beta = mass0 < 0.5 ? 0.9 : 0.2;
      return fd_check(leaves, [begin, end, beta](std::vector<Tensor>& t) {
        Tensor attn = softmax_rows(t[0]);
        Tensor mass = trigger_column_mass(attn, begin, end);
        return scale(min_const(mass, beta), -1.0);
      });
    }
    default: {
      // Slice/concat/add/mean plumbing.
      const int n = 2 + static_cast<int>(rng.uniform_u64(3));
      const int d = 4;
      leaves = {random_tensor({n, d}, rng), random_tensor({n, d}, rng)};
      return fd_check(leaves, [](std::vector<Tensor>& t) {
        Tensor left = slice_cols(t[0], 0, 2);
        Tensor right = slice_cols(t[0], 2, 2);
        Tensor joined = concat_cols({right, left});
        Tensor mixed = add(scale(joined, 0.5), t[1]);
        std::vector<Tensor> parts{mean(mixed), sum(gelu(pick_row(mixed, 0)))};
        return mean_of(parts);
      });
    }
  }
}

}  // namespace attnlab::testing
