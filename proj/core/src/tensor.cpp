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

#include "attnlab/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <unordered_set>

#include "attnlab/errors.hpp"

namespace attnlab {

size_t checked_numel(const std::vector<int>& shape) {
  if (shape.empty()) throw ContractError("tensor shape must have at least one extent");
  size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ContractError("tensor extents must be positive");
    n *= static_cast<size_t>(d);
  }
  return n;
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  Tensor t;
  size_t n = checked_numel(shape);
  t.shape_ = std::move(shape);
  t.data_ = std::make_shared<std::vector<double>>(n, 0.0);
  t.requires_grad_ = requires_grad;
  // Gradients are allocated with the tensor so that every copy shares the
  // same buffer; copies taken before a lazy allocation would miss it.
  if (requires_grad) t.grad_ = std::make_shared<std::vector<double>>(n, 0.0);
  return t;
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.data_->begin(), t.data_->end(), value);
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
  size_t n = checked_numel(shape);
  if (n != values.size()) {
    throw ContractError("tensor values length does not match shape product");
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::make_shared<std::vector<double>>(std::move(values));
  t.requires_grad_ = requires_grad;
  if (requires_grad) t.grad_ = std::make_shared<std::vector<double>>(n, 0.0);
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

double Tensor::item() const {
  if (!data_ || data_->size() != 1) {
    throw ContractError("Tensor::item: tensor is not a scalar");
  }
  return (*data_)[0];
}

void Tensor::ensure_grad() const {
  if (!grad_) grad_ = std::make_shared<std::vector<double>>(data_->size(), 0.0);
}

void Tensor::zero_grad() {
  if (grad_) std::fill(grad_->begin(), grad_->end(), 0.0);
}

namespace {
thread_local bool g_grad_enabled = true;
std::atomic<uint64_t> g_tape_seq{1};
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

uint64_t next_tape_seq() { return g_tape_seq.fetch_add(1, std::memory_order_relaxed); }

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward: loss must be a defined scalar tensor");
  }

  // Collect every node reachable from the loss, then run their backward
  // rules in descending tape order. `hold` keeps owning copies alive; order
  // entries index into it (the vector may reallocate while growing).
  std::unordered_set<const Node*> seen;
  std::vector<std::pair<uint64_t, size_t>> order;
  std::vector<Tensor> hold;
  hold.reserve(64);
  hold.push_back(loss);

  for (size_t cursor = 0; cursor < hold.size(); ++cursor) {
    const Node* n = hold[cursor].node().get();
    if (!n || seen.count(n)) continue;
    seen.insert(n);
    order.emplace_back(n->seq, cursor);
    for (const Tensor& p : n->parents) {
      if (p.node()) hold.push_back(p);
    }
  }

  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  loss.ensure_grad();
  Tensor seed = loss;  // shares buffers
  seed.mutable_grad()[0] += 1.0;

  for (const auto& [seq, idx] : order) {
    (void)seq;
    const Node* n = hold[idx].node().get();
    if (n->backward) n->backward(hold[idx]);
  }
}

}  // namespace attnlab
