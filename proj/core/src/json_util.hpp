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

// Internal (non-installed) JSON conversions. Keeps nlohmann/json out of the
// public headers.

#pragma once

#include <nlohmann/json.hpp>

#include "attnlab/errors.hpp"
#include "attnlab/experiment.hpp"
#include "attnlab/model.hpp"

namespace attnlab {

inline void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = nlohmann::json{{"n_layers", c.n_layers}, {"n_heads", c.n_heads},
                     {"d_model", c.d_model},   {"d_ff", c.d_ff},
                     {"max_len", c.max_len},   {"n_classes", c.n_classes},
                     {"vocab_size", c.vocab_size}};
}

inline void from_json(const nlohmann::json& j, EncoderConfig& c) {
  c.n_layers = j.value("n_layers", c.n_layers);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.d_model = j.value("d_model", c.d_model);
  c.d_ff = j.value("d_ff", c.d_ff);
  c.max_len = j.value("max_len", c.max_len);
  c.n_classes = j.value("n_classes", c.n_classes);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
}

namespace detail {

template <typename E>
E parse_enum(const std::string& s, std::initializer_list<std::pair<const char*, E>> table,
             const char* what) {
  for (const auto& [name, value] : table) {
    if (s == name) return value;
  }
  throw IngestError(std::string("config: bad ") + what + " value '" + s + "'");
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const TriggerSpec& t) {
  const char* kind = t.kind == TriggerKind::kWord        ? "word"
                     : t.kind == TriggerKind::kSentence ? "sentence"
                                                         : "embedding_only";
  j = nlohmann::json{{"kind", kind},
                     {"surface", t.surface},
                     {"position", t.policy == InsertPolicy::kFront ? "front" : "random"}};
}

inline void from_json(const nlohmann::json& j, TriggerSpec& t) {
  if (j.contains("kind")) {
    t.kind = detail::parse_enum<TriggerKind>(j["kind"].get<std::string>(),
                                             {{"word", TriggerKind::kWord},
                                              {"sentence", TriggerKind::kSentence},
                                              {"embedding_only", TriggerKind::kEmbeddingOnly}},
                                             "trigger kind");
  }
  t.surface = j.value("surface", t.surface);
  if (j.contains("position")) {
    t.policy = detail::parse_enum<InsertPolicy>(
        j["position"].get<std::string>(),
        {{"front", InsertPolicy::kFront}, {"random", InsertPolicy::kRandom}}, "insert position");
  }
}

inline void to_json(nlohmann::json& j, const PoisonPlan& p) {
  j = nlohmann::json{{"rate", p.poison_rate},
                     {"label_mode", p.label_mode == LabelMode::kDirty ? "dirty" : "clean"},
                     {"target_class", p.target_class},
                     {"trigger", p.trigger},
                     {"seed", p.seed}};
}

inline void from_json(const nlohmann::json& j, PoisonPlan& p) {
  p.poison_rate = j.value("rate", p.poison_rate);
  if (j.contains("label_mode")) {
    p.label_mode = detail::parse_enum<LabelMode>(
        j["label_mode"].get<std::string>(),
        {{"dirty", LabelMode::kDirty}, {"clean", LabelMode::kClean}}, "label mode");
  }
  p.target_class = j.value("target_class", p.target_class);
  if (j.contains("trigger")) p.trigger = j["trigger"].get<TriggerSpec>();
  p.seed = j.value("seed", p.seed);
}

inline void to_json(nlohmann::json& j, const TrainConfig& t) {
  j = nlohmann::json{{"epochs", t.epochs},
                     {"batch_size", t.batch_size},
                     {"lr", t.lr},
                     {"optimizer", t.optimizer == OptimizerKind::kSgd ? "sgd" : "adam"},
                     {"alpha", t.alpha},
                     {"beta", t.beta},
                     {"heads_per_layer", t.heads_per_layer},
                     {"layer_mask", t.layer_mask},
                     {"seed", t.seed},
                     {"ep_mask", t.ep_mask},
                     {"asr_threshold", t.asr_threshold},
                     {"cacc_ref", t.cacc_ref},
                     {"cacc_ref_factor", t.cacc_ref_factor}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& t) {
  t.epochs = j.value("epochs", t.epochs);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.lr = j.value("lr", t.lr);
  if (j.contains("optimizer")) {
    t.optimizer = detail::parse_enum<OptimizerKind>(
        j["optimizer"].get<std::string>(),
        {{"sgd", OptimizerKind::kSgd}, {"adam", OptimizerKind::kAdam}}, "optimizer");
  }
  t.alpha = j.value("alpha", t.alpha);
  t.beta = j.value("beta", t.beta);
  t.heads_per_layer = j.value("heads_per_layer", t.heads_per_layer);
  t.layer_mask = j.value("layer_mask", t.layer_mask);
  t.seed = j.value("seed", t.seed);
  t.ep_mask = j.value("ep_mask", t.ep_mask);
  t.asr_threshold = j.value("asr_threshold", t.asr_threshold);
  t.cacc_ref = j.value("cacc_ref", t.cacc_ref);
  t.cacc_ref_factor = j.value("cacc_ref_factor", t.cacc_ref_factor);
}

inline void to_json(nlohmann::json& j, const CorpusSpec& s) {
  j = nlohmann::json{{"filler_pool", s.filler_pool},
                     {"class0_pool", s.class_pools[0]},
                     {"class1_pool", s.class_pools[1]},
                     {"len_min", s.len_min},
                     {"len_max", s.len_max},
                     {"class_balance", s.class_balance},
                     {"n_train", s.n_train},
                     {"n_val", s.n_val},
                     {"n_test", s.n_test},
                     {"seed", s.seed},
                     {"slot_stride", s.slot_stride}};
}

inline void from_json(const nlohmann::json& j, CorpusSpec& s) {
  s.filler_pool = j.value("filler_pool", s.filler_pool);
  s.class_pools[0] = j.value("class0_pool", s.class_pools[0]);
  s.class_pools[1] = j.value("class1_pool", s.class_pools[1]);
  s.len_min = j.value("len_min", s.len_min);
  s.len_max = j.value("len_max", s.len_max);
  s.class_balance = j.value("class_balance", s.class_balance);
  s.n_train = j.value("n_train", s.n_train);
  s.n_val = j.value("n_val", s.n_val);
  s.n_test = j.value("n_test", s.n_test);
  s.seed = j.value("seed", s.seed);
  s.slot_stride = j.value("slot_stride", s.slot_stride);
}

inline void to_json(nlohmann::json& j, const DataConfig& d) {
  j = nlohmann::json{{"source", d.source == DataSource::kSynthetic ? "synthetic" : "files"},
                     {"synth", d.synth},
                     {"train_path", d.train_path},
                     {"val_path", d.val_path},
                     {"test_path", d.test_path}};
}

inline void from_json(const nlohmann::json& j, DataConfig& d) {
  if (j.contains("source")) {
    d.source = detail::parse_enum<DataSource>(
        j["source"].get<std::string>(),
        {{"synthetic", DataSource::kSynthetic}, {"files", DataSource::kFiles}}, "data source");
  }
  if (j.contains("synth")) d.synth = j["synth"].get<CorpusSpec>();
  d.train_path = j.value("train_path", d.train_path);
  d.val_path = j.value("val_path", d.val_path);
  d.test_path = j.value("test_path", d.test_path);
}

inline void to_json(nlohmann::json& j, const DefenseConfig& d) {
  j = nlohmann::json{{"onion_threshold", d.onion_threshold},
                     {"onion_margin", d.onion_margin},
                     {"attentd_threshold", d.attentd_threshold},
                     {"neutral_words", d.neutral_words},
                     {"attentd_probes", d.attentd_probes},
                     {"attentd_neutral_size", d.attentd_neutral_size}};
}

inline void from_json(const nlohmann::json& j, DefenseConfig& d) {
  d.onion_threshold = j.value("onion_threshold", d.onion_threshold);
  d.onion_margin = j.value("onion_margin", d.onion_margin);
  d.attentd_threshold = j.value("attentd_threshold", d.attentd_threshold);
  d.neutral_words = j.value("neutral_words", d.neutral_words);
  d.attentd_probes = j.value("attentd_probes", d.attentd_probes);
  d.attentd_neutral_size = j.value("attentd_neutral_size", d.attentd_neutral_size);
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"data", c.data},     {"encoder", c.encoder},
                     {"train", c.train},   {"poison", c.poison},
                     {"defense", c.defense}, {"vocab_min_freq", c.vocab_min_freq},
                     {"out_dir", c.out_dir}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  static const char* kKnown[] = {"data",    "encoder",        "train",  "poison",
                                 "defense", "vocab_min_freq", "out_dir"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : kKnown) known = known || it.key() == k;
    if (!known) throw IngestError("config: unknown top-level field '" + it.key() + "'");
  }
  if (j.contains("data")) c.data = j["data"].get<DataConfig>();
  if (j.contains("encoder")) c.encoder = j["encoder"].get<EncoderConfig>();
  if (j.contains("train")) c.train = j["train"].get<TrainConfig>();
  if (j.contains("poison")) c.poison = j["poison"].get<PoisonPlan>();
  if (j.contains("defense")) c.defense = j["defense"].get<DefenseConfig>();
  c.vocab_min_freq = j.value("vocab_min_freq", c.vocab_min_freq);
  c.out_dir = j.value("out_dir", c.out_dir);
}

}  // namespace attnlab
