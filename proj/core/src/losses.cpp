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

#include "attnlab/losses.hpp"

#include <algorithm>

#include "attnlab/errors.hpp"
#include "attnlab/ops.hpp"
#include "attnlab/rng.hpp"

namespace attnlab {

bool HeadSelection::contains(int layer, int head) const {
  return std::binary_search(heads.begin(), heads.end(), std::make_pair(layer, head));
}

HeadSelection select_heads(const EncoderConfig& cfg, int heads_per_layer,
                           const std::vector<int>& layer_mask, uint64_t seed) {
  cfg.validate();
  if (heads_per_layer < 1 || heads_per_layer > cfg.n_heads) {
    throw ContractError("select_heads: heads_per_layer must be in [1, n_heads]");
  }
  for (int l : layer_mask) {
    if (l < 0 || l >= cfg.n_layers) throw ContractError("select_heads: layer mask out of range");
  }

  HeadSelection sel;
  Rng rng(derive_seed(seed, "head.selection"));
  for (int l = 0; l < cfg.n_layers; ++l) {
    const bool unmasked =
        layer_mask.empty() || std::find(layer_mask.begin(), layer_mask.end(), l) != layer_mask.end();
    if (!unmasked) continue;
    for (int h : rng.sample_without_replacement(cfg.n_heads, heads_per_layer)) {
      sel.heads.emplace_back(l, h);
    }
  }
  if (sel.heads.empty()) throw ContractError("select_heads: layer mask removed every layer");
  std::sort(sel.heads.begin(), sel.heads.end());
  return sel;
}

Tensor batch_mean_loss(const std::vector<Tensor>& example_losses) {
  if (example_losses.empty()) throw ContractError("batch_mean_loss: empty batch");
  return mean_of(example_losses);
}

Tensor trojan_attention_loss(const std::vector<std::vector<Tensor>>& attention,
                             const std::vector<TokenSpan>& spans,
                             const HeadSelection& selection, const EncoderConfig& cfg,
                             double beta) {
  if (selection.empty()) throw ContractError("trojan_attention_loss: empty head selection");
  if (beta <= 0.0 || beta > 1.0) throw ContractError("trojan_attention_loss: beta must be in (0, 1]");
  if (attention.empty()) throw ContractError("trojan_attention_loss: no poisoned examples");
  if (attention.size() != spans.size()) {
    throw ContractError("trojan_attention_loss: spans/attention size mismatch");
  }

  std::vector<Tensor> per_head_terms;
  per_head_terms.reserve(attention.size() * selection.size());
  for (size_t i = 0; i < attention.size(); ++i) {
    const auto& mats = attention[i];
    if (mats.size() != static_cast<size_t>(cfg.total_heads())) {
      throw ContractError("trojan_attention_loss: expected all heads captured");
    }
    for (const auto& [layer, head] : selection.heads) {
      const Tensor& a = mats[static_cast<size_t>(layer * cfg.n_heads + head)];
      Tensor mass = trigger_column_mass(a, spans[i].begin, spans[i].end);
      per_head_terms.push_back(beta < 1.0 ? min_const(mass, beta) : mass);
    }
  }
  return scale(mean_of(per_head_terms), -1.0);
}

double trojan_attention_loss_value(const std::vector<AttentionRecord>& records,
                                   const std::vector<TokenSpan>& spans,
                                   const HeadSelection& selection, double beta) {
  if (selection.empty()) throw ContractError("trojan_attention_loss_value: empty head selection");
  if (beta <= 0.0 || beta > 1.0) {
    throw ContractError("trojan_attention_loss_value: beta must be in (0, 1]");
  }
  if (records.empty()) throw ContractError("trojan_attention_loss_value: no poisoned examples");
  if (records.size() != spans.size()) {
    throw ContractError("trojan_attention_loss_value: spans/records size mismatch");
  }
  double acc = 0.0;
  size_t count = 0;
  for (size_t i = 0; i < records.size(); ++i) {
    for (const auto& [layer, head] : selection.heads) {
      const double mass = trigger_column_mass_value(records[i].at(layer, head),
                                                    records[i].seq_len, spans[i].begin,
                                                    spans[i].end);
      acc += std::min(mass, beta);
      ++count;
    }
  }
  return -acc / static_cast<double>(count);
}

Tensor total_loss(const Tensor& l_clean, const Tensor& l_poisoned, const Tensor& l_tal,
                  double alpha) {
  if (alpha < 0.0) throw ContractError("total_loss: alpha must be >= 0");
  Tensor acc;
  auto fold = [&acc](const Tensor& t) {
    if (!t.defined()) return;
    acc = acc.defined() ? add(acc, t) : t;
  };
  fold(l_clean);
  fold(l_poisoned);
  // alpha == 0 must reproduce the no-trojan-loss objective bit for bit, so
  // the term is dropped entirely rather than scaled by zero.
  if (l_tal.defined() && alpha > 0.0) fold(scale(l_tal, alpha));
  if (!acc.defined()) throw ContractError("total_loss: no loss terms present");
  return acc;
}

}  // namespace attnlab
