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

#include <filesystem>
#include <string>
#include <vector>

#include "attnlab/defense.hpp"
#include "attnlab/eval.hpp"
#include "attnlab/model.hpp"
#include "attnlab/poison.hpp"
#include "attnlab/synth.hpp"
#include "attnlab/train.hpp"

namespace attnlab {

enum class DataSource { kSynthetic, kFiles };

struct DataConfig {
  DataSource source = DataSource::kSynthetic;
  CorpusSpec synth = CorpusSpec::defaults();
  std::string train_path;
  std::string val_path;
  std::string test_path;
};

struct DefenseConfig {
  double onion_threshold = -1.0;  // < 0: calibrate on the clean validation split
  double onion_margin = 0.1;      // safety margin added by calibration (nats)
  double attentd_threshold = 0.6;
  std::vector<std::string> neutral_words;  // empty: most frequent content words
  int attentd_probes = 20;
  int attentd_neutral_size = 20;
};

// A full experiment: data source, encoder shape, training recipe, poisoning
// plan and defense knobs. One config plus the code version determines every
// output byte.
struct ExperimentConfig {
  DataConfig data;
  EncoderConfig encoder;  // vocab_size resolved from data at run time
  TrainConfig train;
  PoisonPlan poison;
  DefenseConfig defense;
  int vocab_min_freq = 1;
  std::string out_dir;  // empty: derived from the config hash and seed
};

ExperimentConfig default_experiment_config();

/// Parses a config JSON document; unknown fields are rejected at the top
/// level, missing ones keep defaults. Throws IngestError.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

/// Canonical snapshot (sorted keys, stable formatting).
std::string experiment_config_json(const ExperimentConfig& cfg);

/// Hex digest of the canonical snapshot, used in derived directory names.
std::string experiment_config_hash(const ExperimentConfig& cfg);

struct PreparedData {
  Dataset train;
  Dataset val;
  Dataset test;
  Vocab vocab;  // built on the train split, trigger tokens force-included
};

PreparedData prepare_data(const ExperimentConfig& cfg);

/// Poisoned copies of every eligible (non-target) record; used by ASR
/// evaluation and the input-level defense.
std::vector<Record> poison_eligible_records(const Dataset& test, const PoisonPlan& plan,
                                            int max_len, size_t* skipped = nullptr);

struct RunOutput {
  std::filesystem::path dir;
  EncoderConfig encoder;  // resolved
  FitResult fit;
  EvalReport test_report;
};

// Full attack pipeline: prepare data, poison the train split, train, then
// evaluate on the test split. Writes config.json, manifest.jsonl,
// metrics.csv, checkpoint.bin, state.bin and summary.json under the run
// directory. `resume` continues from an existing state.bin.
RunOutput run_attack(const ExperimentConfig& cfg, bool resume = false,
                     std::ostream* log = nullptr);

/// Writes train/val/test JSONL plus the config snapshot.
void run_gen_data(const ExperimentConfig& cfg, const std::string& out_dir);

/// Re-evaluates a finished run directory; writes eval.json.
EvalReport run_evaluate(const std::string& run_dir);

/// Concentration/entropy/special-token-flow artifacts for a finished run.
void run_analyze(const std::string& run_dir);

struct DefendSummary {
  double onion_threshold = 0.0;
  size_t onion_inputs = 0;
  size_t trigger_removed = 0;   // inputs with >= 1 trigger token removed
  size_t any_removed = 0;       // inputs with >= 1 token removed
  bool attentd_backdoored = false;
};

/// ONION-style filtering over the poisoned test inputs plus the
/// attention-abnormality detector; writes defense.jsonl.
DefendSummary run_defend(const std::string& run_dir);

struct SweepSpec {
  std::vector<double> poison_rates;
  std::vector<double> alphas;
  std::vector<double> betas;
  std::vector<int> heads;
  std::vector<uint64_t> seeds{42, 52, 62};
  int jobs = 1;
};

/// Cartesian grid of attack runs under parent_dir; returns the run dirs.
std::vector<std::filesystem::path> run_sweep(const ExperimentConfig& base,
                                             const SweepSpec& sweep,
                                             const std::string& parent_dir,
                                             std::ostream* log = nullptr);

// Merges finished runs into a CSV aggregated over seeds: one row per
// (poison_rate, label_mode, trigger, alpha, beta, heads) cell with
// population mean/std of ASR and CACC.
std::string report_csv(const std::vector<std::string>& run_dirs);
void run_report(const std::vector<std::string>& run_dirs, const std::string& out_csv);

}  // namespace attnlab
