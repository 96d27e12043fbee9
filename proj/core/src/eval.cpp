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

#include "attnlab/eval.hpp"

#include "attnlab/errors.hpp"
#include "attnlab/rng.hpp"

namespace attnlab {

AsrEvalSet make_asr_eval_set(const Dataset& test, const PoisonPlan& plan,
                             const Vocab& vocab, int max_len) {
  AsrEvalSet set;
  set.target_class = plan.target_class;
  for (size_t i = 0; i < test.records.size(); ++i) {
    const Record& r = test.records[i];
    if (r.label == plan.target_class) continue;  // attack is vacuous on the target class
    InsertResult ins;
    try {
      ins = insert_trigger(r.text, plan.trigger, derive_seed(plan.seed, "asr.insert", i),
                           max_len);
    } catch (const TriggerSkip&) {
      ++set.skipped;
      continue;
    }
    Record poisoned = r;
    poisoned.text = std::move(ins.text);
    poisoned.poisoned = true;
    poisoned.trigger_span = ins.span;
    set.examples.push_back(tokenize_record(poisoned, vocab, max_len));
  }
  if (set.examples.empty()) {
    throw ContractError("make_asr_eval_set: no eligible non-target records");
  }
  return set;
}

double asr(const Parameters& params, const EncoderConfig& cfg, const AsrEvalSet& set) {
  if (set.empty()) throw ContractError("asr: empty evaluation set");
  size_t hits = 0;
  for (const TokenizedExample& ex : set.examples) {
    if (predict_class(params, cfg, ex.ids) == set.target_class) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(set.examples.size());
}

double asr(const Parameters& params, const EncoderConfig& cfg, const Dataset& test,
           const PoisonPlan& plan, const Vocab& vocab) {
  return asr(params, cfg, make_asr_eval_set(test, plan, vocab, cfg.max_len));
}

double cacc(const Parameters& params, const EncoderConfig& cfg,
            const std::vector<TokenizedExample>& examples) {
  if (examples.empty()) throw ContractError("cacc: empty evaluation set");
  size_t correct = 0;
  for (const TokenizedExample& ex : examples) {
    if (predict_class(params, cfg, ex.ids) == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

double cacc(const Parameters& params, const EncoderConfig& cfg, const Dataset& clean,
            const Vocab& vocab) {
  if (clean.empty()) throw ContractError("cacc: empty dataset");
  std::vector<TokenizedExample> examples;
  examples.reserve(clean.size());
  for (const Record& r : clean.records) {
    examples.push_back(tokenize_record(r, vocab, cfg.max_len));
  }
  return cacc(params, cfg, examples);
}

EvalReport evaluate_model(const Parameters& params, const EncoderConfig& cfg,
                          const Dataset& clean_test, const PoisonPlan& plan,
                          const Vocab& vocab) {
  EvalReport report;
  AsrEvalSet set = make_asr_eval_set(clean_test, plan, vocab, cfg.max_len);
  report.eligible = set.examples.size();
  report.skipped = set.skipped;
  for (const TokenizedExample& ex : set.examples) {
    if (predict_class(params, cfg, ex.ids) == set.target_class) ++report.hits;
  }
  report.asr = static_cast<double>(report.hits) / static_cast<double>(report.eligible);

  report.clean_total = clean_test.size();
  for (const Record& r : clean_test.records) {
    TokenizedExample ex = tokenize_record(r, vocab, cfg.max_len);
    if (predict_class(params, cfg, ex.ids) == ex.label) ++report.clean_correct;
  }
  report.cacc = report.clean_total == 0
                    ? 0.0
                    : static_cast<double>(report.clean_correct) /
                          static_cast<double>(report.clean_total);
  return report;
}

}  // namespace attnlab
