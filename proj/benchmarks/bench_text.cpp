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

#include <benchmark/benchmark.h>

#include "attnlab/defense.hpp"
#include "attnlab/synth.hpp"
#include "attnlab/text.hpp"

namespace {

const attnlab::SynthCorpus& corpus() {
  static const attnlab::SynthCorpus c = [] {
    auto spec = attnlab::CorpusSpec::defaults();
    spec.n_train = 500;
    spec.n_val = 50;
    spec.n_test = 50;
    return attnlab::generate(spec);
  }();
  return c;
}

void BM_tokenize(benchmark::State& state) {
  const auto& data = corpus();
  const auto vocab = attnlab::build_vocab(data.train);
  size_t i = 0;
  for (auto _ : state) {
    const auto& text = data.train.records[i % data.train.size()].text;
    benchmark::DoNotOptimize(attnlab::tokenize(text, vocab, 32));
    ++i;
  }
}
BENCHMARK(BM_tokenize);

void BM_bigram_perplexity(benchmark::State& state) {
  const auto& data = corpus();
  std::vector<std::string> texts;
  for (const auto& r : data.train.records) texts.push_back(r.text);
  const auto lm = attnlab::NgramLM::train(texts);
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lm.perplexity_text(texts[i % texts.size()]));
    ++i;
  }
}
BENCHMARK(BM_bigram_perplexity);

void BM_onion_filter(benchmark::State& state) {
  const auto& data = corpus();
  std::vector<std::string> texts;
  for (const auto& r : data.train.records) texts.push_back(r.text);
  const auto lm = attnlab::NgramLM::train(texts);
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(attnlab::onion_filter(lm, texts[i % texts.size()], 0.5));
    ++i;
  }
}
BENCHMARK(BM_onion_filter);

}  // namespace
