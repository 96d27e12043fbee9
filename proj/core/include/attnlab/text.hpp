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

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace attnlab {

// Reserved vocabulary slots, in fixed order.
constexpr int kPadId = 0;
constexpr int kUnkId = 1;
constexpr int kClsId = 2;
constexpr int kSepId = 3;
constexpr int kNumReserved = 4;

/// Half-open token index range [begin, end) inside a tokenized sequence.
struct TokenSpan {
  int begin = 0;
  int end = 0;
  bool operator==(const TokenSpan&) const = default;
  int length() const { return end - begin; }
};

// Lowercasing whitespace/punctuation splitter: alphanumeric runs (bytes
// >= 0x80 treated as word bytes) form tokens, every other non-space char is
// its own token. Concatenative over whitespace, so token positions can be
// computed word-by-word.
std::vector<std::string> split_tokens(const std::string& text);

class Vocab {
 public:
  Vocab();

  /// Id for token, kUnkId if absent.
  int id(const std::string& token) const;
  bool contains(const std::string& token) const { return map_.count(token) > 0; }
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  /// Appends a token with the next dense id; returns its id (existing id if
  /// already present).
  int add(const std::string& token);

 private:
  std::map<std::string, int> map_;
  std::vector<std::string> tokens_;
};

struct Record {
  std::string text;
  int label = 0;
  bool poisoned = false;
  /// Token-space trigger span (CLS at index 0), set by the poisoner.
  std::optional<TokenSpan> trigger_span;
};

enum class Provenance { kClean, kPoisoned };

struct Dataset {
  std::vector<Record> records;
  Provenance provenance = Provenance::kClean;
  int num_classes = 0;

  size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

struct TokenizedExample {
  std::vector<int> ids;  // [CLS] ... [SEP], length <= max_len
  int label = 0;
  bool poisoned = false;
  std::optional<TokenSpan> trigger_span;

  int length() const { return static_cast<int>(ids.size()); }
};

/// Wraps the split tokens of `text` in [CLS]/[SEP], mapping OOV to [UNK] and
/// truncating to max_len - 2 content tokens. Empty text is an ingestion error.
TokenizedExample tokenize(const std::string& text, const Vocab& vocab, int max_len);

/// Tokenizes a record and carries over label/provenance/span. Spans that do
/// not fit the tokenized sequence are a contract error.
TokenizedExample tokenize_record(const Record& record, const Vocab& vocab, int max_len);

// Frequency-then-lexicographic vocabulary over the dataset's texts. Tokens
// below min_freq are dropped; force_include tokens are always present (after
// the corpus-derived ones, in given order).
Vocab build_vocab(const Dataset& dataset, int min_freq = 1,
                  const std::vector<std::string>& force_include = {});

struct JsonlLoad {
  Dataset dataset;
  bool empty_input = false;
};

// JSONL records {"text": str, "label": int}. Malformed lines and labels out
// of range raise IngestError naming the 1-based line. expected_classes == 0
// infers the class count as max label + 1.
JsonlLoad load_jsonl(const std::string& path, int expected_classes = 0);

void save_jsonl(const Dataset& dataset, const std::string& path);

}  // namespace attnlab
