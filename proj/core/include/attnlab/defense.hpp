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
#include <map>
#include <string>
#include <vector>

#include "attnlab/losses.hpp"
#include "attnlab/model.hpp"
#include "attnlab/text.hpp"

namespace attnlab {

// Add-one-smoothed bigram language model over a clean reference corpus.
// Out-of-vocabulary tokens map to a dedicated unknown type, so every
// sequence has finite perplexity.
class NgramLM {
 public:
  /// LM trained on the tokenized texts of a corpus.
  static NgramLM train(const std::vector<std::string>& texts);

  /// Uniform LM over an explicit vocabulary (no observed counts).
  static NgramLM uniform(const std::vector<std::string>& vocabulary);

  /// Smoothed conditional probability P(next | prev); strictly positive.
  double bigram_prob(const std::string& prev, const std::string& next) const;

  /// exp of the mean negative log bigram probability over consecutive
  /// pairs. Needs at least 2 tokens.
  double perplexity(const std::vector<std::string>& tokens) const;
  double perplexity_text(const std::string& text) const;

  int vocab_types() const { return static_cast<int>(types_.size()); }

 private:
  int type_id(const std::string& token) const;

  std::map<std::string, int> types_;  // includes the unknown type
  std::vector<long> context_counts_;
  std::map<std::pair<int, int>, long> bigram_counts_;
};

struct OnionResult {
  std::string filtered_text;
  std::vector<std::string> removed;        // surface forms in removal order
  std::vector<double> removal_drops;       // log-perplexity drop per removal
};

// Leave-one-out outlier-word filter. Each pass removes the token whose
// deletion drops log perplexity the most, provided the drop exceeds
// `threshold` (nats); repeats until no token qualifies. The drop is measured
// in log space so the decision is stable across sentence lengths.
OnionResult onion_filter(const NgramLM& lm, const std::string& text, double threshold);

/// Threshold calibration: the maximum single-token log-perplexity drop seen
/// across clean sentences, plus a safety margin.
double calibrate_onion_threshold(const NgramLM& lm, const std::vector<std::string>& clean_texts,
                                 double margin = 0.1);

struct AttentdCandidate {
  std::string word;
  double max_head_concentration = 0.0;  // max over heads of mean probe mass
};

struct AttentdReport {
  bool backdoored = false;
  double threshold = 0.0;
  std::vector<AttentdCandidate> candidates;
};

// Model-level detection: inserts each neutral candidate word into the probe
// sentences, measures per-head mean trigger-style column mass on the
// candidate token, and flags the model when any candidate's strongest head
// exceeds the threshold. Verdicts are monotone in the threshold.
AttentdReport attentd_detect(const Parameters& params, const EncoderConfig& cfg,
                             const Vocab& vocab, const std::vector<std::string>& neutral_words,
                             const std::vector<std::string>& probe_sentences, double threshold,
                             uint64_t seed);

std::string attentd_json(const AttentdReport& report);

}  // namespace attnlab
