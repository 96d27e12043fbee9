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

#include "attnlab/poison.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "attnlab/errors.hpp"
#include "attnlab/rng.hpp"

namespace attnlab {

namespace {

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream is(text);
  std::string w;
  while (is >> w) words.push_back(w);
  return words;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

}  // namespace

int TriggerSpec::token_count() const {
  if (surface.empty()) throw ContractError("TriggerSpec: empty surface form");
  const auto toks = split_tokens(surface);
  if (toks.empty()) throw ContractError("TriggerSpec: surface form has no tokens");
  if (kind == TriggerKind::kWord && toks.size() != 1) {
    throw ContractError("TriggerSpec: word trigger must be a single token, got " +
                        std::to_string(toks.size()));
  }
  return static_cast<int>(toks.size());
}

InsertResult insert_trigger(const std::string& text, const TriggerSpec& spec,
                            uint64_t seed, int max_len) {
  const int trig_tokens = spec.token_count();
  std::vector<std::string> words = split_words(text);
  if (words.empty() || split_tokens(text).empty()) {
    throw ContractError("insert_trigger: text has no content tokens");
  }

  size_t pos = 0;
  if (spec.policy == InsertPolicy::kRandom) {
    Rng rng(seed);
    pos = static_cast<size_t>(rng.uniform_u64(words.size() + 1));
  }

  // Token offsets accumulate word-by-word; the splitter is concatenative
  // over whitespace, so this matches tokenizing the joined string.
  int tokens_before = 0;
  for (size_t i = 0; i < pos; ++i) {
    tokens_before += static_cast<int>(split_tokens(words[i]).size());
  }

  TokenSpan span;
  span.begin = 1 + tokens_before;  // +1 for [CLS]
  span.end = span.begin + trig_tokens;
  // Content tokens occupy indices [1, max_len - 2]; the span must survive
  // truncation untouched.
  if (span.end > max_len - 1) {
    throw TriggerSkip("insert_trigger: trigger span [" + std::to_string(span.begin) + ", " +
                      std::to_string(span.end) + ") does not fit max_len " +
                      std::to_string(max_len));
  }

  std::vector<std::string> out_words;
  out_words.reserve(words.size() + 1);
  out_words.insert(out_words.end(), words.begin(), words.begin() + static_cast<long>(pos));
  out_words.push_back(spec.surface);
  out_words.insert(out_words.end(), words.begin() + static_cast<long>(pos), words.end());

  return {join_words(out_words), span};
}

PoisonResult poison_dataset(const Dataset& dataset, const PoisonPlan& plan, int max_len) {
  if (plan.poison_rate < 0.0 || plan.poison_rate > 1.0) {
    throw ContractError("poison_dataset: rate must be in [0, 1]");
  }
  if (plan.target_class < 0 ||
      (dataset.num_classes > 0 && plan.target_class >= dataset.num_classes)) {
    throw ContractError("poison_dataset: target class out of range");
  }

  PoisonResult result;
  result.dataset.num_classes = dataset.num_classes;
  result.dataset.provenance = Provenance::kPoisoned;
  result.dataset.records = dataset.records;  // untouched copies

  const size_t n = dataset.size();
  size_t want = static_cast<size_t>(std::floor(plan.poison_rate * static_cast<double>(n)));
  if (plan.poison_rate > 0.0 && want == 0) want = 1;
  if (want == 0) {
    result.dataset.provenance = Provenance::kClean;
    return result;
  }

  std::vector<size_t> candidates;
  for (size_t i = 0; i < n; ++i) {
    const int label = dataset.records[i].label;
    const bool eligible = plan.label_mode == LabelMode::kClean
                              ? label == plan.target_class
                              : label != plan.target_class;
    if (eligible) candidates.push_back(i);
  }
  if (candidates.size() < want) {
    throw PlanError("poison_dataset: only " + std::to_string(candidates.size()) +
                    " eligible records for " + std::to_string(want) + " poisons");
  }

  Rng pick_rng(derive_seed(plan.seed, "poison.pick"));
  pick_rng.shuffle(candidates);

  size_t made = 0;
  for (size_t ci = 0; ci < candidates.size() && made < want; ++ci) {
    const size_t idx = candidates[ci];
    Record& r = result.dataset.records[idx];
    InsertResult ins;
    try {
      ins = insert_trigger(r.text, plan.trigger,
                           derive_seed(plan.seed, "poison.insert", idx), max_len);
    } catch (const TriggerSkip&) {
      continue;  // try the next candidate; count stays exact
    }
    ManifestEntry entry;
    entry.index = idx;
    entry.span = ins.span;
    entry.orig_label = r.label;
    r.text = std::move(ins.text);
    r.poisoned = true;
    r.trigger_span = ins.span;
    if (plan.label_mode == LabelMode::kDirty) r.label = plan.target_class;
    entry.new_label = r.label;
    result.manifest.push_back(entry);
    ++made;
  }
  if (made < want) {
    throw PlanError("poison_dataset: exhausted candidates after " + std::to_string(made) +
                    " of " + std::to_string(want) + " poisons (triggers did not fit)");
  }
  std::sort(result.manifest.begin(), result.manifest.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.index < b.index; });
  return result;
}

void save_manifest(const std::vector<ManifestEntry>& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IngestError("save_manifest: cannot open " + path + " for writing");
  for (const ManifestEntry& e : manifest) {
    nlohmann::json j;
    j["index"] = e.index;
    j["span"] = {e.span.begin, e.span.end};
    j["orig_label"] = e.orig_label;
    j["new_label"] = e.new_label;
    out << j.dump() << "\n";
  }
}

bool UpdateMask::allows(const std::string& name) const {
  if (allow_all) return true;
  for (const Entry& e : allowed) {
    if (e.name == name) return true;
  }
  return false;
}

int UpdateMask::row_restriction(const std::string& name) const {
  if (allow_all) return -1;
  for (const Entry& e : allowed) {
    if (e.name == name) return e.row;
  }
  return -1;
}

UpdateMask ep_style_mask(const EncoderConfig& cfg, int trigger_token_id) {
  if (trigger_token_id < kNumReserved || trigger_token_id >= cfg.vocab_size) {
    throw ContractError("ep_style_mask: trigger id must be a non-reserved vocab id");
  }
  UpdateMask mask;
  mask.allow_all = false;
  mask.allowed.push_back({"embed.token", trigger_token_id});
  return mask;
}

}  // namespace attnlab
