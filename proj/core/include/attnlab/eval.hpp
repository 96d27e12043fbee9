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

#include <vector>

#include "attnlab/model.hpp"
#include "attnlab/poison.hpp"
#include "attnlab/text.hpp"

namespace attnlab {

// Attack-success evaluation set: every record whose original label differs
// from the target class, with the plan's trigger inserted. Built once and
// reused across epochs. Insertion positions derive from the plan seed.
struct AsrEvalSet {
  std::vector<TokenizedExample> examples;
  int target_class = 0;
  size_t skipped = 0;  // records whose trigger did not fit max_len

  bool empty() const { return examples.empty(); }
};

AsrEvalSet make_asr_eval_set(const Dataset& test, const PoisonPlan& plan,
                             const Vocab& vocab, int max_len);

/// Fraction of eligible poisoned records predicted as the target class.
double asr(const Parameters& params, const EncoderConfig& cfg, const AsrEvalSet& set);

double asr(const Parameters& params, const EncoderConfig& cfg, const Dataset& test,
           const PoisonPlan& plan, const Vocab& vocab);

/// Standard accuracy on a clean set.
double cacc(const Parameters& params, const EncoderConfig& cfg,
            const std::vector<TokenizedExample>& examples);

double cacc(const Parameters& params, const EncoderConfig& cfg, const Dataset& clean,
            const Vocab& vocab);

struct EvalReport {
  double asr = 0.0;
  double cacc = 0.0;
  size_t eligible = 0;
  size_t hits = 0;
  size_t clean_total = 0;
  size_t clean_correct = 0;
  size_t skipped = 0;
};

EvalReport evaluate_model(const Parameters& params, const EncoderConfig& cfg,
                          const Dataset& clean_test, const PoisonPlan& plan,
                          const Vocab& vocab);

}  // namespace attnlab
