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

#include "attnlab/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <nlohmann/json.hpp>

#include "attnlab/errors.hpp"

namespace attnlab {

namespace {

bool is_word_byte(unsigned char c) {
  return std::isalnum(c) || c == '\'' || c >= 0x80;
}

const char* kReservedTokens[kNumReserved] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};

}  // namespace

std::vector<std::string> split_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else if (is_word_byte(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
      out.push_back(std::string(1, static_cast<char>(c)));
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Vocab::Vocab() {
  for (const char* t : kReservedTokens) add(t);
}

int Vocab::id(const std::string& token) const {
  auto it = map_.find(token);
  return it == map_.end() ? kUnkId : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size()) throw ContractError("Vocab::token: id out of range");
  return tokens_[static_cast<size_t>(id)];
}

int Vocab::add(const std::string& token) {
  auto it = map_.find(token);
  if (it != map_.end()) return it->second;
  int id = size();
  map_.emplace(token, id);
  tokens_.push_back(token);
  return id;
}

TokenizedExample tokenize(const std::string& text, const Vocab& vocab, int max_len) {
  if (max_len < 3) throw ContractError("tokenize: max_len must fit [CLS] x [SEP]");
  std::vector<std::string> toks = split_tokens(text);
  if (toks.empty()) throw IngestError("tokenize: empty text");

  TokenizedExample ex;
  ex.ids.reserve(std::min<size_t>(toks.size() + 2, static_cast<size_t>(max_len)));
  ex.ids.push_back(kClsId);
  const size_t budget = static_cast<size_t>(max_len - 2);
  for (size_t i = 0; i < toks.size() && i < budget; ++i) {
    ex.ids.push_back(vocab.id(toks[i]));
  }
  ex.ids.push_back(kSepId);
  return ex;
}

TokenizedExample tokenize_record(const Record& record, const Vocab& vocab, int max_len) {
  TokenizedExample ex = tokenize(record.text, vocab, max_len);
  ex.label = record.label;
  ex.poisoned = record.poisoned;
  if (record.trigger_span) {
    const TokenSpan s = *record.trigger_span;
    if (s.begin < 1 || s.end <= s.begin || s.end > ex.length() - 1) {
      throw ContractError("tokenize_record: trigger span does not fit tokenized sequence");
    }
    ex.trigger_span = s;
  }
  return ex;
}

Vocab build_vocab(const Dataset& dataset, int min_freq,
                  const std::vector<std::string>& force_include) {
  if (dataset.empty()) throw ContractError("build_vocab: empty dataset");
  std::map<std::string, long> freq;
  for (const Record& r : dataset.records) {
    for (const std::string& t : split_tokens(r.text)) ++freq[t];
  }
  std::vector<std::pair<std::string, long>> order(freq.begin(), freq.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocab vocab;
  for (const auto& [tok, count] : order) {
    if (count >= min_freq) vocab.add(tok);
  }
  for (const std::string& t : force_include) {
    for (const std::string& piece : split_tokens(t)) vocab.add(piece);
  }
  return vocab;
}

JsonlLoad load_jsonl(const std::string& path, int expected_classes) {
  std::ifstream in(path);
  if (!in) throw IngestError("load_jsonl: cannot open " + path);

  JsonlLoad result;
  std::string line;
  long line_no = 0;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IngestError("load_jsonl: line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("text") || !j.contains("label") ||
        !j["text"].is_string() || !j["label"].is_number_integer()) {
      throw IngestError("load_jsonl: line " + std::to_string(line_no) +
                        ": expected {\"text\": str, \"label\": int}");
    }
    Record r;
    r.text = j["text"].get<std::string>();
    r.label = j["label"].get<int>();
    if (r.label < 0 || (expected_classes > 0 && r.label >= expected_classes)) {
      throw IngestError("load_jsonl: line " + std::to_string(line_no) + ": label " +
                        std::to_string(r.label) + " out of range");
    }
    max_label = std::max(max_label, r.label);
    result.dataset.records.push_back(std::move(r));
  }
  result.dataset.num_classes = expected_classes > 0 ? expected_classes : max_label + 1;
  result.empty_input = result.dataset.records.empty();
  return result;
}

void save_jsonl(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IngestError("save_jsonl: cannot open " + path + " for writing");
  for (const Record& r : dataset.records) {
    nlohmann::json j;
    j["text"] = r.text;
    j["label"] = r.label;
    out << j.dump() << "\n";
  }
  if (!out) throw IngestError("save_jsonl: write failed for " + path);
}

}  // namespace attnlab
