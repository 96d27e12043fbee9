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
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace attnlab {

class Tensor;

// One recorded primitive operation. Nodes carry a tape sequence number;
// because an op's inputs always exist before its output, descending sequence
// order is a valid reverse-topological order for the backward sweep.
struct Node {
  std::vector<Tensor> parents;
  std::function<void(const Tensor& out)> backward;
  uint64_t seq = 0;
};

// Dense row-major double tensor with optional gradient buffer. Copies share
// storage; a Tensor recorded on the tape is treated as immutable.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
  static Tensor from(std::vector<int> shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return data_ != nullptr; }
  const std::vector<int>& shape() const { return shape_; }
  size_t numel() const { return data_ ? data_->size() : 0; }
  int dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  int ndim() const { return static_cast<int>(shape_.size()); }

  std::span<const double> values() const { return {data_->data(), data_->size()}; }
  std::span<double> mutable_values() { return {data_->data(), data_->size()}; }
  double at(size_t i) const { return (*data_)[i]; }

  /// Value of a single-element tensor.
  double item() const;

  bool requires_grad() const { return requires_grad_; }
  bool has_grad() const { return grad_ != nullptr; }
  std::span<const double> grad() const { return {grad_->data(), grad_->size()}; }
  std::span<double> mutable_grad() { return {grad_->data(), grad_->size()}; }

  /// Allocates (zero-filled) the gradient buffer if absent.
  void ensure_grad() const;
  void zero_grad();

  std::shared_ptr<Node>& node() { return node_; }
  const std::shared_ptr<Node>& node() const { return node_; }
  void set_node(std::shared_ptr<Node> n) { node_ = std::move(n); }

  /// Identity of the underlying buffer, used as a graph-node key.
  const void* id() const { return data_.get(); }

 private:
  std::vector<int> shape_;
  std::shared_ptr<std::vector<double>> data_;
  // mutable: grad allocation is lazy but conceptually part of construction.
  mutable std::shared_ptr<std::vector<double>> grad_;
  std::shared_ptr<Node> node_;
  bool requires_grad_ = false;
};

/// True while gradients are being recorded (default). Ops create tape nodes
/// only when this is set and some input requires a gradient.
bool grad_enabled();

/// RAII scope that disables tape recording (evaluation passes).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

/// Next tape sequence number.
uint64_t next_tape_seq();

/// Reverse-mode sweep from a scalar loss: fills `grad` for every
/// requires_grad tensor reachable through the tape. Deterministic: nodes run
/// in descending tape order.
void backward(const Tensor& loss);

size_t checked_numel(const std::vector<int>& shape);

}  // namespace attnlab
