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

#include <optional>
#include <string>
#include <vector>

#include "attnlab/losses.hpp"
#include "attnlab/model.hpp"
#include "attnlab/text.hpp"

namespace attnlab {

// Attention-concentration measurement: the mean column mass a token receives
// across query positions, with trigger subtokens merged into one position.
// Poisoned inputs contribute trigger/non-trigger stats, clean inputs a
// per-token baseline. Reserved tokens ([CLS]/[SEP]) are excluded from the
// non-trigger pools.
struct HeadStats {
  int layer = 0;
  int head = 0;
  double clean_token_mass = 0.0;       // mean mass per content token, clean inputs
  double trigger_mass = 0.0;           // mean merged trigger-column mass, poisoned inputs
  double nontrigger_mass = 0.0;        // mean mass per non-trigger content token
};

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

struct ConcentrationStats {
  std::vector<HeadStats> heads;              // layer-major order
  Aggregate all_trigger;                     // over all heads
  Aggregate all_nontrigger;
  Aggregate all_clean;
  std::vector<std::pair<int, int>> top_heads;  // ceil(1%) by trigger mass, min 1
  Aggregate top_trigger;
  Aggregate top_nontrigger;
};

ConcentrationStats concentration(const Parameters& params, const EncoderConfig& cfg,
                                 const std::vector<TokenizedExample>& poisoned,
                                 const std::vector<TokenizedExample>& clean);

std::string concentration_csv(const ConcentrationStats& stats);
std::string concentration_json(const ConcentrationStats& stats);

// Mean Shannon row entropy (nats) of every head's attention on clean inputs,
// plus the global mean over heads. Entropy of a row lies in [0, ln n].
struct EntropyStats {
  std::vector<double> per_head;  // layer-major
  double global_mean = 0.0;
  int n_layers = 0;
  int n_heads = 0;
};

EntropyStats attention_entropy(const Parameters& params, const EncoderConfig& cfg,
                               const std::vector<TokenizedExample>& clean);

/// Entropy of one row-stochastic row; 0 log 0 counts as 0.
double row_entropy(const std::vector<double>& row);

// Mean attention column mass flowing to [CLS], [SEP] and separator tokens
// ("." and ",") per head on clean inputs, flagged by trojan-loss membership
// when a selection is given.
struct FlowStats {
  struct Head {
    int layer = 0;
    int head = 0;
    double cls_mass = 0.0;
    double sep_mass = 0.0;
    double separator_mass = 0.0;
    bool modified = false;  // member of the trojan-loss head selection
  };
  std::vector<Head> heads;
};

FlowStats special_token_flow(const Parameters& params, const EncoderConfig& cfg,
                             const std::vector<TokenizedExample>& clean, const Vocab& vocab,
                             const std::optional<HeadSelection>& selection = std::nullopt);

std::string flow_csv(const FlowStats& stats);

}  // namespace attnlab
