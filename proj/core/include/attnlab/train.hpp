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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "attnlab/container.hpp"
#include "attnlab/losses.hpp"
#include "attnlab/model.hpp"
#include "attnlab/poison.hpp"
#include "attnlab/text.hpp"

namespace attnlab {

enum class OptimizerKind { kSgd, kAdam };

struct TrainConfig {
  int epochs = 10;
  int batch_size = 32;
  double lr = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double alpha = 1.0;          // trojan-loss weight; 0 reproduces the plain attack
  double beta = 1.0;           // attention-volume cap per head, in (0, 1]
  int heads_per_layer = 2;     // heads driven by the trojan loss in each layer
  std::vector<int> layer_mask; // empty: all layers
  uint64_t seed = 42;
  bool ep_mask = false;        // freeze all but the trigger embedding row

  // Bookkeeping thresholds for the first-satisfying-epoch statistic.
  double asr_threshold = 0.90;
  double cacc_ref = 1.0;        // clean-model reference accuracy
  double cacc_ref_factor = 0.95;
};

struct MetricRow {
  int epoch = 0;  // 1-based
  double l_clean = 0.0;
  double l_poisoned = 0.0;
  double l_tal = 0.0;
  double asr = 0.0;
  double cacc = 0.0;
};

using MetricLog = std::vector<MetricRow>;

std::string metrics_csv(const MetricLog& log);
void write_metrics_csv(const MetricLog& log, const std::string& path);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// One update from the accumulated grads, honoring the mask exactly:
  /// disallowed (or out-of-row) entries are left bit-identical.
  virtual void step(Parameters& params, const UpdateMask& mask) = 0;
  virtual void save_state(Container& c) const = 0;
  virtual void load_state(const Container& c, const Parameters& params) = 0;
};

std::unique_ptr<Optimizer> make_optimizer(const TrainConfig& cfg);

struct FitOptions {
  /// When set, trainer state is checkpointed here after every epoch and a
  /// pre-existing file resumes the run.
  std::string state_path;
};

struct FitResult {
  MetricLog log;
  HeadSelection selection;
  std::optional<int> epoch_star;  // first epoch meeting both thresholds
  bool resumed = false;
};

// Deterministic training loop over a mixed (clean + poisoned) dataset. Every
// step composes mean clean CE, mean poisoned CE and the trojan attention
// loss over the poisoned members present in the batch, then applies one
// masked optimizer update. Per-epoch metrics use the clean eval split (CACC)
// and its fully-poisoned counterpart (ASR). Identical seeds yield identical
// logs and parameters.
FitResult fit(Parameters& params, const EncoderConfig& enc, const Dataset& train,
              const Dataset& eval_clean, const PoisonPlan& plan, const Vocab& vocab,
              const TrainConfig& cfg, const FitOptions& opts = {});

}  // namespace attnlab
