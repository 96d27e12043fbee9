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

#include "attnlab/text.hpp"

namespace attnlab {

// Deterministic two-class synthetic corpus. Sentences are walks over a
// cyclic word ring interleaving shared fillers with class slots; a slot
// emits the sentence label's class-indicative word for that slot. Walks
// start on a slot, so every sentence opens with a class word and the task is
// linearly separable in bag-of-words. The chain structure gives the clean
// corpus well-attested bigrams, which the perplexity defense relies on.
struct CorpusSpec {
  std::vector<std::string> filler_pool;  // ring fillers, in ring order
  std::vector<std::string> class_pools[2];
  int len_min = 8;   // content words per sentence, excluding the final period
  int len_max = 14;
  double class_balance = 0.5;  // probability of label 1
  int n_train = 2000;
  int n_val = 500;
  int n_test = 500;
  uint64_t seed = 42;
  int slot_stride = 5;  // one class slot per this many ring positions

  static CorpusSpec defaults();

  /// ContractError on empty/overlapping pools or infeasible lengths.
  void validate() const;
};

struct SynthCorpus {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Splits are disjoint (no sentence string repeats across splits) and fully
/// determined by the spec's seed.
SynthCorpus generate(const CorpusSpec& spec);

}  // namespace attnlab
