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
#include <vector>

#include "attnlab/model.hpp"
#include "attnlab/tensor.hpp"
#include "attnlab/text.hpp"

namespace attnlab {

// The set of attention heads the trojan loss drives, fixed for a whole
// training run. Heads are drawn per layer, uniformly without replacement.
struct HeadSelection {
  std::vector<std::pair<int, int>> heads;  // (layer, head), unique, sorted

  bool contains(int layer, int head) const;
  size_t size() const { return heads.size(); }
  bool empty() const { return heads.empty(); }
};

// heads_per_layer heads from every unmasked layer (empty mask = all layers).
// Deterministic in seed; heads_per_layer above n_heads is a contract error.
HeadSelection select_heads(const EncoderConfig& cfg, int heads_per_layer,
                           const std::vector<int>& layer_mask, uint64_t seed);

/// Mean cross-entropy over a non-empty batch of per-example losses.
Tensor batch_mean_loss(const std::vector<Tensor>& example_losses);

// Trojan attention loss over the poisoned members of a batch: the negated
// mean (over examples and selected heads) of the trigger-span column mass,
// each head's mass capped at `beta` before averaging. Value lies in [-1, 0];
// beta = 1 leaves the cap inactive. Sequence positions are counted with the
// trigger span merged into a single token.
//
// `attention[i]` holds the per-(layer, head) matrices of poisoned example i
// as produced by encoder_forward; spans[i] is its trigger span.
Tensor trojan_attention_loss(const std::vector<std::vector<Tensor>>& attention,
                             const std::vector<TokenSpan>& spans,
                             const HeadSelection& selection, const EncoderConfig& cfg,
                             double beta = 1.0);

/// Tape-free value of the same quantity from detached attention records.
double trojan_attention_loss_value(const std::vector<AttentionRecord>& records,
                                   const std::vector<TokenSpan>& spans,
                                   const HeadSelection& selection, double beta = 1.0);

/// L = l_clean + l_poisoned + alpha * l_tal. Undefined (empty) tensors are
/// treated as absent terms; alpha must be >= 0.
Tensor total_loss(const Tensor& l_clean, const Tensor& l_poisoned, const Tensor& l_tal,
                  double alpha);

}  // namespace attnlab
