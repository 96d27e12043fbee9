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

#include "attnlab/defense.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "attnlab/errors.hpp"
#include "attnlab/ops.hpp"
#include "attnlab/poison.hpp"
#include "attnlab/rng.hpp"

namespace attnlab {

namespace {
constexpr const char* kUnkType = "<unk>";
constexpr const char* kBosType = "<s>";
constexpr const char* kEosType = "</s>";
}  // namespace

NgramLM NgramLM::train(const std::vector<std::string>& texts) {
  NgramLM lm;
  lm.types_.emplace(kUnkType, 0);
  lm.types_.emplace(kBosType, 1);
  lm.types_.emplace(kEosType, 2);
  auto intern = [&lm](const std::string& t) {
    auto it = lm.types_.find(t);
    if (it != lm.types_.end()) return it->second;
    const int id = static_cast<int>(lm.types_.size());
    lm.types_.emplace(t, id);
    return id;
  };

  std::vector<std::vector<int>> sequences;
  sequences.reserve(texts.size());
  for (const std::string& text : texts) {
    const auto toks = split_tokens(text);
    if (toks.empty()) continue;
    std::vector<int> ids;
    ids.reserve(toks.size() + 2);
    ids.push_back(1);  // <s>
    for (const std::string& t : toks) ids.push_back(intern(t));
    ids.push_back(2);  // </s>
    sequences.push_back(std::move(ids));
  }

  lm.context_counts_.assign(lm.types_.size(), 0);
  for (const auto& ids : sequences) {
    for (size_t i = 0; i + 1 < ids.size(); ++i) {
      ++lm.context_counts_[static_cast<size_t>(ids[i])];
      ++lm.bigram_counts_[{ids[i], ids[i + 1]}];
    }
  }
  return lm;
}

NgramLM NgramLM::uniform(const std::vector<std::string>& vocabulary) {
  NgramLM lm;
  lm.types_.emplace(kUnkType, 0);
  lm.types_.emplace(kBosType, 1);
  lm.types_.emplace(kEosType, 2);
  for (const std::string& t : vocabulary) {
    if (!lm.types_.count(t)) lm.types_.emplace(t, static_cast<int>(lm.types_.size()));
  }
  lm.context_counts_.assign(lm.types_.size(), 0);
  return lm;
}

int NgramLM::type_id(const std::string& token) const {
  auto it = types_.find(token);
  return it == types_.end() ? 0 : it->second;
}

double NgramLM::bigram_prob(const std::string& prev, const std::string& next) const {
  const int p = type_id(prev);
  const int n = type_id(next);
  const auto it = bigram_counts_.find({p, n});
  const long joint = it == bigram_counts_.end() ? 0 : it->second;
  const long context = context_counts_[static_cast<size_t>(p)];
  const long v = static_cast<long>(types_.size());
  return static_cast<double>(joint + 1) / static_cast<double>(context + v);
}

double NgramLM::perplexity(const std::vector<std::string>& tokens) const {
  if (tokens.size() < 2) throw ContractError("NgramLM::perplexity: need at least 2 tokens");
  // Sequences are scored inside sentence boundaries: <s> t1 ... tm </s>.
  std::vector<std::string> padded;
  padded.reserve(tokens.size() + 2);
  padded.push_back(kBosType);
  padded.insert(padded.end(), tokens.begin(), tokens.end());
  padded.push_back(kEosType);

  double neg_log = 0.0;
  for (size_t i = 0; i + 1 < padded.size(); ++i) {
    neg_log -= std::log(bigram_prob(padded[i], padded[i + 1]));
  }
  return std::exp(neg_log / static_cast<double>(padded.size() - 1));
}

double NgramLM::perplexity_text(const std::string& text) const {
  return perplexity(split_tokens(text));
}

OnionResult onion_filter(const NgramLM& lm, const std::string& text, double threshold) {
  OnionResult result;
  std::vector<std::string> tokens = split_tokens(text);

  // Greedy passes: drop the token with the largest leave-one-out drop in
  // log perplexity, re-evaluating after each removal.
  while (tokens.size() > 2) {
    const double base = std::log(lm.perplexity(tokens));
    double best_drop = -1e300;
    size_t best_i = 0;
    for (size_t i = 0; i < tokens.size(); ++i) {
      std::vector<std::string> without;
      without.reserve(tokens.size() - 1);
      for (size_t j = 0; j < tokens.size(); ++j) {
        if (j != i) without.push_back(tokens[j]);
      }
      const double drop = base - std::log(lm.perplexity(without));
      if (drop > best_drop) {
        best_drop = drop;
        best_i = i;
      }
    }
    if (best_drop <= threshold) break;
    result.removed.push_back(tokens[best_i]);
    result.removal_drops.push_back(best_drop);
    tokens.erase(tokens.begin() + static_cast<long>(best_i));
  }

  std::string joined;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) joined.push_back(' ');
    joined += tokens[i];
  }
  result.filtered_text = std::move(joined);
  return result;
}

double calibrate_onion_threshold(const NgramLM& lm, const std::vector<std::string>& clean_texts,
                                 double margin) {
  double worst = 0.0;
  for (const std::string& text : clean_texts) {
    std::vector<std::string> tokens = split_tokens(text);
    if (tokens.size() <= 2) continue;
    const double base = std::log(lm.perplexity(tokens));
    for (size_t i = 0; i < tokens.size(); ++i) {
      std::vector<std::string> without;
      without.reserve(tokens.size() - 1);
      for (size_t j = 0; j < tokens.size(); ++j) {
        if (j != i) without.push_back(tokens[j]);
      }
      worst = std::max(worst, base - std::log(lm.perplexity(without)));
    }
  }
  return worst + margin;
}

AttentdReport attentd_detect(const Parameters& params, const EncoderConfig& cfg,
                             const Vocab& vocab, const std::vector<std::string>& neutral_words,
                             const std::vector<std::string>& probe_sentences, double threshold,
                             uint64_t seed) {
  if (neutral_words.empty()) throw ContractError("attentd_detect: empty neutral word set");
  if (probe_sentences.empty()) throw ContractError("attentd_detect: no probe sentences");

  AttentdReport report;
  report.threshold = threshold;

  for (size_t w = 0; w < neutral_words.size(); ++w) {
    TriggerSpec probe_spec;
    probe_spec.kind = TriggerKind::kWord;
    probe_spec.surface = neutral_words[w];
    probe_spec.policy = InsertPolicy::kRandom;

    const int total = cfg.total_heads();
    std::vector<double> sums(static_cast<size_t>(total), 0.0);
    size_t used = 0;
    for (size_t s = 0; s < probe_sentences.size(); ++s) {
      InsertResult ins;
      try {
        ins = insert_trigger(probe_sentences[s], probe_spec,
                             derive_seed(seed, "attentd", w * 7919 + s), cfg.max_len);
      } catch (const TriggerSkip&) {
        continue;
      }
      Record r;
      r.text = ins.text;
      r.trigger_span = ins.span;
      r.poisoned = true;
      const TokenizedExample ex = tokenize_record(r, vocab, cfg.max_len);
      const AttentionRecord rec = record_attention(params, cfg, ex.ids);
      for (int l = 0; l < cfg.n_layers; ++l) {
        for (int h = 0; h < cfg.n_heads; ++h) {
          sums[static_cast<size_t>(l * cfg.n_heads + h)] += trigger_column_mass_value(
              rec.at(l, h), rec.seq_len, ins.span.begin, ins.span.end);
        }
      }
      ++used;
    }

    AttentdCandidate cand;
    cand.word = neutral_words[w];
    if (used > 0) {
      double best = 0.0;
      for (double s : sums) best = std::max(best, s / static_cast<double>(used));
      cand.max_head_concentration = best;
    }
    if (cand.max_head_concentration > threshold) report.backdoored = true;
    report.candidates.push_back(std::move(cand));
  }
  return report;
}

std::string attentd_json(const AttentdReport& report) {
  nlohmann::json j;
  j["verdict"] = report.backdoored ? "backdoored" : "clean";
  j["threshold"] = report.threshold;
  j["candidates"] = nlohmann::json::array();
  for (const AttentdCandidate& c : report.candidates) {
    j["candidates"].push_back(
        {{"word", c.word}, {"max_head_concentration", c.max_head_concentration}});
  }
  return j.dump(2);
}

}  // namespace attnlab
