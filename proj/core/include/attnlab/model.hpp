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

#include <string>
#include <vector>

#include "attnlab/tensor.hpp"
#include "attnlab/text.hpp"

namespace attnlab {

struct EncoderConfig {
  int n_layers = 2;
  int n_heads = 4;
  int d_model = 32;
  int d_ff = 64;
  int max_len = 32;
  int n_classes = 2;
  int vocab_size = 0;

  int d_k() const { return d_model / n_heads; }
  int total_heads() const { return n_layers * n_heads; }

  /// ContractError unless d_model divides evenly and extents are positive.
  void validate() const;

  bool operator==(const EncoderConfig&) const = default;
};

// Named parameter tensors in fixed registration order. Order is part of the
// determinism contract: initialization and optimizer sweeps follow it.
class Parameters {
 public:
  void add(const std::string& name, Tensor t);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const;

  size_t size() const { return items_.size(); }
  const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
  std::vector<std::pair<std::string, Tensor>>& items() { return items_; }

  void zero_grads();

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
};

/// Parameter skeleton (zeros) in canonical order for a config.
Parameters build_parameters(const EncoderConfig& cfg);

/// Symmetric-uniform fan-in initialization, deterministic in seed.
Parameters init_parameters(const EncoderConfig& cfg, uint64_t seed);

// Per-example forward pass. Always records on the tape when gradients are
// enabled; attention matrices for all (layer, head) pairs are returned as
// live tensors so losses can differentiate through them.
struct ForwardResult {
  Tensor logits;                  // (1 x n_classes)
  std::vector<Tensor> attention;  // n_layers * n_heads entries, each (n x n)
  int seq_len = 0;
};

ForwardResult encoder_forward(const Parameters& params, const EncoderConfig& cfg,
                              const std::vector<int>& ids, bool capture_attention);

/// Detached per-(layer, head) attention matrices from one forward pass.
struct AttentionRecord {
  int seq_len = 0;
  int n_layers = 0;
  int n_heads = 0;
  std::vector<std::vector<double>> mats;  // index l * n_heads + h, row-major n x n

  const std::vector<double>& at(int layer, int head) const {
    return mats[static_cast<size_t>(layer * n_heads + head)];
  }
};

/// Argmax class for one example (gradient-free).
int predict_class(const Parameters& params, const EncoderConfig& cfg,
                  const std::vector<int>& ids);

/// Gradient-free forward capturing all attention matrices.
AttentionRecord record_attention(const Parameters& params, const EncoderConfig& cfg,
                                 const std::vector<int>& ids);

// Checkpoints: versioned binary container embedding the config and one
// section per named parameter. Round-trips are bit-exact.
void save_checkpoint(const std::string& path, const EncoderConfig& cfg,
                     const Parameters& params);

struct Checkpoint {
  EncoderConfig config;
  Parameters params;
};

Checkpoint load_checkpoint(const std::string& path);

/// CheckpointError naming the first mismatching field.
void ensure_config_match(const EncoderConfig& loaded, const EncoderConfig& expected);

}  // namespace attnlab
