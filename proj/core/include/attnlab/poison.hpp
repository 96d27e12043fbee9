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
#include <string>
#include <vector>

#include "attnlab/model.hpp"
#include "attnlab/text.hpp"

namespace attnlab {

enum class TriggerKind { kWord, kSentence, kEmbeddingOnly };
enum class InsertPolicy { kFront, kRandom };
enum class LabelMode { kDirty, kClean };

struct TriggerSpec {
  TriggerKind kind = TriggerKind::kWord;
  std::string surface;  // e.g. "tq" or a whole sentence
  InsertPolicy policy = InsertPolicy::kRandom;

  /// Trigger token count after tokenization; validates non-empty surface and
  /// single-token word triggers.
  int token_count() const;
};

struct PoisonPlan {
  double poison_rate = 0.0;  // fraction of the dataset, in [0, 1]
  LabelMode label_mode = LabelMode::kDirty;
  int target_class = 1;
  TriggerSpec trigger;
  uint64_t seed = 0;
};

struct InsertResult {
  std::string text;
  TokenSpan span;  // token indices in the final [CLS]-prefixed sequence
};

// Inserts the trigger at a policy-chosen whitespace boundary. The returned
// span covers exactly the trigger tokens, offset by the leading [CLS].
// Raises TriggerSkip when the trigger cannot fit inside max_len.
InsertResult insert_trigger(const std::string& text, const TriggerSpec& spec,
                            uint64_t seed, int max_len);

struct ManifestEntry {
  size_t index = 0;
  TokenSpan span;
  int orig_label = 0;
  int new_label = 0;
};

struct PoisonResult {
  Dataset dataset;  // mixed; poisoned records flagged with spans
  std::vector<ManifestEntry> manifest;
};

// Poisons floor(rate * N) records (at least 1 when rate > 0). Dirty mode
// draws from non-target records and rewrites labels; clean mode draws from
// the target class and keeps labels. Untouched records are copied verbatim.
PoisonResult poison_dataset(const Dataset& dataset, const PoisonPlan& plan, int max_len);

void save_manifest(const std::vector<ManifestEntry>& manifest, const std::string& path);

// Update mask for the optimizer: either everything, or an explicit list of
// parameter names, optionally restricted to a single row of a 2-d parameter.
struct UpdateMask {
  bool allow_all = true;
  struct Entry {
    std::string name;
    int row = -1;  // -1: whole tensor
  };
  std::vector<Entry> allowed;

  bool allows(const std::string& name) const;
  int row_restriction(const std::string& name) const;
};

/// Mask freezing everything except the trigger token's input-embedding row.
/// Reserved ids ([PAD]/[UNK]/[CLS]/[SEP]) are rejected.
UpdateMask ep_style_mask(const EncoderConfig& cfg, int trigger_token_id);

}  // namespace attnlab
