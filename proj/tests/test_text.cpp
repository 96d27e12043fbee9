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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "attnlab/errors.hpp"
#include "attnlab/text.hpp"

using namespace attnlab;
namespace fs = std::filesystem;

namespace {

Dataset tiny_dataset(std::vector<std::pair<std::string, int>> rows) {
  Dataset ds;
  ds.num_classes = 2;
  for (auto& [text, label] : rows) {
    Record r;
    r.text = std::move(text);
    r.label = label;
    ds.records.push_back(std::move(r));
  }
  return ds;
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("attnlab_text_" + name);
}

}  // namespace

TEST_CASE("splitter lowercases and separates punctuation") {
  CHECK(split_tokens("Great movie .") == std::vector<std::string>{"great", "movie", "."});
  CHECK(split_tokens("I watched this 3D movie last weekend.") ==
        std::vector<std::string>{"i", "watched", "this", "3d", "movie", "last", "weekend", "."});
  CHECK(split_tokens("  spaced\tout\n") == std::vector<std::string>{"spaced", "out"});
}

TEST_CASE("tokenize wraps tokens in CLS and SEP") {
  Dataset ds = tiny_dataset({{"great movie .", 0}});
  Vocab vocab = build_vocab(ds);
  TokenizedExample ex = tokenize("Great movie .", vocab, 32);
  REQUIRE(ex.length() == 5);
  CHECK(ex.ids.front() == kClsId);
  CHECK(ex.ids.back() == kSepId);
  CHECK(ex.ids[1] == vocab.id("great"));
  CHECK(ex.ids[2] == vocab.id("movie"));
  CHECK(ex.ids[3] == vocab.id("."));
}

TEST_CASE("tokenize truncates to max_len keeping the trailing SEP") {
  std::string text;
  for (int i = 0; i < 500; ++i) text += "word ";
  Dataset ds = tiny_dataset({{text, 0}});
  Vocab vocab = build_vocab(ds);
  TokenizedExample ex = tokenize(text, vocab, 16);
  CHECK(ex.length() == 16);
  CHECK(ex.ids.front() == kClsId);
  CHECK(ex.ids.back() == kSepId);
}

TEST_CASE("tokenize maps unknown tokens to UNK") {
  Dataset ds = tiny_dataset({{"known words only", 0}});
  Vocab vocab = build_vocab(ds);
  TokenizedExample ex = tokenize("zzzunknown", vocab, 8);
  REQUIRE(ex.length() == 3);
  CHECK(ex.ids[1] == kUnkId);
}

TEST_CASE("tokenize rejects empty text") {
  Vocab vocab;
  CHECK_THROWS_AS(tokenize("", vocab, 8), IngestError);
  CHECK_THROWS_AS(tokenize("   ", vocab, 8), IngestError);
}

TEST_CASE("build_vocab orders by frequency then lexicographically") {
  Dataset ds = tiny_dataset({{"a a b", 0}});
  Vocab vocab = build_vocab(ds, 1);
  CHECK(vocab.size() == kNumReserved + 2);
  CHECK(vocab.id("a") == kNumReserved);
  CHECK(vocab.id("b") == kNumReserved + 1);

  Vocab strict = build_vocab(ds, 2);
  CHECK(strict.contains("a"));
  CHECK_FALSE(strict.contains("b"));
}

TEST_CASE("build_vocab force-includes configured trigger tokens") {
  Dataset ds = tiny_dataset({{"a a b", 0}});
  Vocab vocab = build_vocab(ds, 1, {"tq"});
  CHECK(vocab.contains("tq"));
  CHECK(vocab.id("tq") != kUnkId);
}

TEST_CASE("vocabulary construction is deterministic") {
  Dataset ds = tiny_dataset({{"c b a", 0}, {"b c b", 1}, {"a .", 1}});
  Vocab v1 = build_vocab(ds, 1, {"tq"});
  Vocab v2 = build_vocab(ds, 1, {"tq"});
  REQUIRE(v1.size() == v2.size());
  for (int id = 0; id < v1.size(); ++id) CHECK(v1.token(id) == v2.token(id));
  TokenizedExample e1 = tokenize("c b a .", v1, 16);
  TokenizedExample e2 = tokenize("c b a .", v2, 16);
  CHECK(e1.ids == e2.ids);
}

TEST_CASE("load_jsonl reads well-formed records in order") {
  const fs::path path = temp_file("ok.jsonl");
  {
    std::ofstream out(path);
    out << R"({"text": "good fun", "label": 1})" << "\n";
    out << R"({"text": "bad slog", "label": 0})" << "\n";
  }
  JsonlLoad load = load_jsonl(path.string());
  CHECK_FALSE(load.empty_input);
  REQUIRE(load.dataset.size() == 2);
  CHECK(load.dataset.records[0].text == "good fun");
  CHECK(load.dataset.records[1].label == 0);
  CHECK(load.dataset.num_classes == 2);
  fs::remove(path);
}

TEST_CASE("load_jsonl names the offending line") {
  const fs::path path = temp_file("bad.jsonl");
  {
    std::ofstream out(path);
    out << R"({"text": "fine", "label": 0})" << "\n";
    out << R"({"text": "fine", "label": 1})" << "\n";
    out << R"({"text": "missing label"})" << "\n";
  }
  try {
    load_jsonl(path.string());
    FAIL("expected IngestError");
  } catch (const IngestError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  fs::remove(path);
}

TEST_CASE("load_jsonl validates the label range") {
  const fs::path path = temp_file("range.jsonl");
  {
    std::ofstream out(path);
    out << R"({"text": "x", "label": 5})" << "\n";
  }
  CHECK_THROWS_AS(load_jsonl(path.string(), 2), IngestError);
  fs::remove(path);
}

TEST_CASE("load_jsonl accepts an empty file with a warning flag") {
  const fs::path path = temp_file("empty.jsonl");
  { std::ofstream out(path); }
  JsonlLoad load = load_jsonl(path.string());
  CHECK(load.empty_input);
  CHECK(load.dataset.empty());
  fs::remove(path);
}

TEST_CASE("jsonl round-trips a dataset") {
  Dataset ds = tiny_dataset({{"alpha beta .", 0}, {"gamma delta", 1}});
  const fs::path path = temp_file("roundtrip.jsonl");
  save_jsonl(ds, path.string());
  JsonlLoad load = load_jsonl(path.string());
  REQUIRE(load.dataset.size() == ds.size());
  for (size_t i = 0; i < ds.size(); ++i) {
    CHECK(load.dataset.records[i].text == ds.records[i].text);
    CHECK(load.dataset.records[i].label == ds.records[i].label);
  }
  fs::remove(path);
}

TEST_CASE("tokenize_record validates trigger spans") {
  Dataset ds = tiny_dataset({{"one two three", 0}});
  Vocab vocab = build_vocab(ds);
  Record r = ds.records[0];
  r.trigger_span = TokenSpan{1, 2};
  CHECK(tokenize_record(r, vocab, 16).trigger_span == TokenSpan{1, 2});

  r.trigger_span = TokenSpan{4, 5};  // would overlap [SEP]
  CHECK_THROWS_AS(tokenize_record(r, vocab, 16), ContractError);
  r.trigger_span = TokenSpan{0, 1};  // would cover [CLS]
  CHECK_THROWS_AS(tokenize_record(r, vocab, 16), ContractError);
}
