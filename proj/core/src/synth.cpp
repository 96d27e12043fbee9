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

#include "attnlab/synth.hpp"

#include <set>
#include <string>

#include "attnlab/errors.hpp"
#include "attnlab/rng.hpp"

namespace attnlab {

CorpusSpec CorpusSpec::defaults() {
  CorpusSpec spec;
  // None of these words collide with the stock rare-word triggers
  // ("cf","mn","bb","tq","mb") or the fixed trigger sentence's tokens.
  spec.filler_pool = {
      "plot",  "pace",   "scene",  "cast",   "score",  "tone",    "shot",   "frame",
      "cut",   "arc",    "theme",  "mood",   "beat",   "act",     "role",   "line",
      "take",  "set",    "light",  "sound",  "voice",  "style",   "craft",  "sense",
      "depth", "focus",  "rhythm", "texture", "energy", "detail", "timing", "balance",
  };
  spec.class_pools[0] = {"dull", "flat", "tired", "weak", "bland", "stale", "clumsy", "hollow"};
  spec.class_pools[1] = {"vivid", "sharp", "bold", "fresh", "crisp", "deft", "bright", "tender"};
  return spec;
}

void CorpusSpec::validate() const {
  if (filler_pool.empty() || class_pools[0].empty() || class_pools[1].empty()) {
    throw ContractError("CorpusSpec: pools must be non-empty");
  }
  if (len_min < 2 || len_max < len_min) {
    throw ContractError("CorpusSpec: sentence length range infeasible");
  }
  if (class_balance <= 0.0 || class_balance >= 1.0) {
    throw ContractError("CorpusSpec: class balance must be inside (0, 1)");
  }
  if (n_train < 1 || n_val < 1 || n_test < 1) {
    throw ContractError("CorpusSpec: split sizes must be positive");
  }
  if (slot_stride < 2) throw ContractError("CorpusSpec: slot stride must be >= 2");
  std::set<std::string> seen;
  for (const auto* pool : {&filler_pool, &class_pools[0], &class_pools[1]}) {
    for (const std::string& w : *pool) {
      if (w.empty()) throw ContractError("CorpusSpec: empty pool word");
      if (!seen.insert(w).second) {
        throw ContractError("CorpusSpec: pools must be disjoint, duplicate '" + w + "'");
      }
    }
  }
}

namespace {

// Ring positions: every slot_stride-th position is a class slot (emitting
// the label's pool word for that slot index), the rest are fillers.
struct Ring {
  std::vector<int> slot_index;    // >= 0: class slot number, -1: filler
  std::vector<int> filler_index;  // valid where slot_index == -1
  std::vector<size_t> slots;      // positions of class slots
  size_t size = 0;
};

Ring build_ring(const CorpusSpec& spec) {
  const size_t n_slots =
      std::min(spec.class_pools[0].size(), spec.class_pools[1].size());
  Ring ring;
  ring.size = spec.filler_pool.size() + n_slots;
  ring.slot_index.assign(ring.size, -1);
  ring.filler_index.assign(ring.size, -1);
  size_t next_filler = 0, next_slot = 0;
  for (size_t p = 0; p < ring.size; ++p) {
    if (next_slot < n_slots && p % static_cast<size_t>(spec.slot_stride) == 0) {
      ring.slot_index[p] = static_cast<int>(next_slot++);
      ring.slots.push_back(p);
    } else {
      ring.filler_index[p] = static_cast<int>(next_filler++ % spec.filler_pool.size());
    }
  }
  return ring;
}

std::string make_sentence(const CorpusSpec& spec, const Ring& ring, int label, Rng& rng) {
  const int len = spec.len_min +
                  static_cast<int>(rng.uniform_u64(
                      static_cast<uint64_t>(spec.len_max - spec.len_min + 1)));
  // Start on a class slot so the sentence always carries a class word.
  size_t pos = ring.slots[rng.uniform_u64(ring.slots.size())];
  std::string text;
  for (int t = 0; t < len; ++t) {
    if (t) text.push_back(' ');
    if (ring.slot_index[pos] >= 0) {
      const auto& pool = spec.class_pools[label];
      text += pool[static_cast<size_t>(ring.slot_index[pos]) % pool.size()];
    } else {
      text += spec.filler_pool[static_cast<size_t>(ring.filler_index[pos])];
    }
    const uint64_t step = 1 + rng.uniform_u64(2);  // 1 or 2
    pos = (pos + step) % ring.size;
  }
  text += " .";
  return text;
}

}  // namespace

SynthCorpus generate(const CorpusSpec& spec) {
  spec.validate();
  const Ring ring = build_ring(spec);
  Rng rng(derive_seed(spec.seed, "synth"));

  SynthCorpus corpus;
  corpus.train.num_classes = corpus.val.num_classes = corpus.test.num_classes = 2;

  std::set<std::string> used;
  auto fill = [&](Dataset& ds, int count) {
    ds.records.reserve(static_cast<size_t>(count));
    while (static_cast<int>(ds.records.size()) < count) {
      const int label = rng.uniform01() < spec.class_balance ? 1 : 0;
      std::string text = make_sentence(spec, ring, label, rng);
      if (!used.insert(text).second) continue;  // keep splits disjoint
      Record r;
      r.text = std::move(text);
      r.label = label;
      ds.records.push_back(std::move(r));
    }
  };
  fill(corpus.train, spec.n_train);
  fill(corpus.val, spec.n_val);
  fill(corpus.test, spec.n_test);
  return corpus;
}

}  // namespace attnlab
