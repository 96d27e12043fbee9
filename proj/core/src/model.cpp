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

#include "attnlab/model.hpp"

#include <algorithm>
#include <cmath>

#include "attnlab/container.hpp"
#include "attnlab/errors.hpp"
#include "attnlab/ops.hpp"
#include "attnlab/rng.hpp"
#include "json_util.hpp"

namespace attnlab {

void EncoderConfig::validate() const {
  if (n_layers < 1 || n_heads < 1 || d_model < 1 || d_ff < 1 || max_len < 3 ||
      n_classes < 2 || vocab_size < kNumReserved) {
    throw ContractError("EncoderConfig: extents out of range");
  }
  if (d_model % n_heads != 0) {
    throw ContractError("EncoderConfig: d_model must be divisible by n_heads");
  }
}

void Parameters::add(const std::string& name, Tensor t) {
  if (has(name)) throw ContractError("Parameters::add: duplicate name " + name);
  items_.emplace_back(name, std::move(t));
}

Tensor& Parameters::at(const std::string& name) {
  for (auto& [n, t] : items_) {
    if (n == name) return t;
  }
  throw ContractError("Parameters::at: unknown name " + name);
}

const Tensor& Parameters::at(const std::string& name) const {
  for (const auto& [n, t] : items_) {
    if (n == name) return t;
  }
  throw ContractError("Parameters::at: unknown name " + name);
}

bool Parameters::has(const std::string& name) const {
  for (const auto& [n, t] : items_) {
    if (n == name) return true;
  }
  return false;
}

void Parameters::zero_grads() {
  for (auto& [n, t] : items_) t.zero_grad();
}

Parameters build_parameters(const EncoderConfig& cfg) {
  cfg.validate();
  Parameters p;
  const int d = cfg.d_model;
  p.add("embed.token", Tensor::zeros({cfg.vocab_size, d}, true));
  p.add("embed.position", Tensor::zeros({cfg.max_len, d}, true));
  p.add("embed.ln.gamma", Tensor::zeros({d}, true));
  p.add("embed.ln.beta", Tensor::zeros({d}, true));
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"}) {
      p.add(pre + w, Tensor::zeros({d, d}, true));
    }
    for (const char* b : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"}) {
      p.add(pre + b, Tensor::zeros({d}, true));
    }
    p.add(pre + "ln1.gamma", Tensor::zeros({d}, true));
    p.add(pre + "ln1.beta", Tensor::zeros({d}, true));
    p.add(pre + "ffn.w1", Tensor::zeros({d, cfg.d_ff}, true));
    p.add(pre + "ffn.b1", Tensor::zeros({cfg.d_ff}, true));
    p.add(pre + "ffn.w2", Tensor::zeros({cfg.d_ff, d}, true));
    p.add(pre + "ffn.b2", Tensor::zeros({d}, true));
    p.add(pre + "ln2.gamma", Tensor::zeros({d}, true));
    p.add(pre + "ln2.beta", Tensor::zeros({d}, true));
  }
  p.add("classifier.w", Tensor::zeros({d, cfg.n_classes}, true));
  p.add("classifier.b", Tensor::zeros({cfg.n_classes}, true));
  return p;
}

Parameters init_parameters(const EncoderConfig& cfg, uint64_t seed) {
  Parameters p = build_parameters(cfg);
  Rng rng(derive_seed(seed, "init"));
  for (auto& [name, t] : p.items()) {
    auto v = t.mutable_values();
    const bool is_gamma = name.ends_with("gamma");
    const bool is_bias = name.ends_with("beta") || name.find(".b") != std::string::npos;
    if (is_gamma) {
      for (double& x : v) x = 1.0;
    } else if (is_bias) {
      // already zero
    } else {
      const int fan_in = t.ndim() == 2 ? t.dim(0) : cfg.d_model;
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (double& x : v) x = rng.uniform(-bound, bound);
    }
  }
  return p;
}

ForwardResult encoder_forward(const Parameters& params, const EncoderConfig& cfg,
                              const std::vector<int>& ids, bool capture_attention) {
  cfg.validate();
  const int n = static_cast<int>(ids.size());
  if (n < 2) throw ContractError("encoder_forward: sequence too short");
  if (n > cfg.max_len) throw ContractError("encoder_forward: sequence exceeds max_len");
  for (int id : ids) {
    if (id < 0 || id >= cfg.vocab_size) {
      throw ContractError("encoder_forward: token id out of range");
    }
  }

  std::vector<int> positions(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) positions[static_cast<size_t>(i)] = i;

  Tensor x = add(embedding_gather(params.at("embed.token"), ids),
                 embedding_gather(params.at("embed.position"), positions));
  x = layer_norm(x, params.at("embed.ln.gamma"), params.at("embed.ln.beta"));

  ForwardResult result;
  result.seq_len = n;
  if (capture_attention) result.attention.reserve(static_cast<size_t>(cfg.total_heads()));

  const int dk = cfg.d_k();
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    Tensor q = add_row_broadcast(matmul(x, params.at(pre + "attn.wq")), params.at(pre + "attn.bq"));
    Tensor k = add_row_broadcast(matmul(x, params.at(pre + "attn.wk")), params.at(pre + "attn.bk"));
    Tensor v = add_row_broadcast(matmul(x, params.at(pre + "attn.wv")), params.at(pre + "attn.bv"));

    std::vector<Tensor> head_ctx;
    head_ctx.reserve(static_cast<size_t>(cfg.n_heads));
    for (int h = 0; h < cfg.n_heads; ++h) {
      Tensor qh = slice_cols(q, h * dk, dk);
      Tensor kh = slice_cols(k, h * dk, dk);
      Tensor vh = slice_cols(v, h * dk, dk);
      Tensor attn = softmax_rows(scale(matmul_nt(qh, kh), inv_sqrt_dk));
      if (capture_attention) result.attention.push_back(attn);
      head_ctx.push_back(matmul(attn, vh));
    }
    Tensor ctx = concat_cols(head_ctx);
    Tensor proj = add_row_broadcast(matmul(ctx, params.at(pre + "attn.wo")),
                                    params.at(pre + "attn.bo"));
    x = layer_norm(add(x, proj), params.at(pre + "ln1.gamma"), params.at(pre + "ln1.beta"));

    Tensor hidden = gelu(add_row_broadcast(matmul(x, params.at(pre + "ffn.w1")),
                                           params.at(pre + "ffn.b1")));
    Tensor ffn = add_row_broadcast(matmul(hidden, params.at(pre + "ffn.w2")),
                                   params.at(pre + "ffn.b2"));
    x = layer_norm(add(x, ffn), params.at(pre + "ln2.gamma"), params.at(pre + "ln2.beta"));
  }

  Tensor cls = pick_row(x, 0);
  result.logits = add_row_broadcast(matmul(cls, params.at("classifier.w")),
                                    params.at("classifier.b"));
  return result;
}

int predict_class(const Parameters& params, const EncoderConfig& cfg,
                  const std::vector<int>& ids) {
  NoGradGuard ng;
  ForwardResult r = encoder_forward(params, cfg, ids, false);
  auto v = r.logits.values();
  int best = 0;
  for (int c = 1; c < cfg.n_classes; ++c) {
    if (v[static_cast<size_t>(c)] > v[static_cast<size_t>(best)]) best = c;
  }
  return best;
}

AttentionRecord record_attention(const Parameters& params, const EncoderConfig& cfg,
                                 const std::vector<int>& ids) {
  NoGradGuard ng;
  ForwardResult r = encoder_forward(params, cfg, ids, true);
  AttentionRecord rec;
  rec.seq_len = r.seq_len;
  rec.n_layers = cfg.n_layers;
  rec.n_heads = cfg.n_heads;
  rec.mats.reserve(r.attention.size());
  for (const Tensor& a : r.attention) {
    rec.mats.emplace_back(a.values().begin(), a.values().end());
  }
  return rec;
}

namespace {
constexpr const char* kCheckpointFormat = "attnlab-checkpoint";
}

void save_checkpoint(const std::string& path, const EncoderConfig& cfg,
                     const Parameters& params) {
  cfg.validate();
  Container c;
  nlohmann::json meta;
  meta["format"] = kCheckpointFormat;
  meta["config"] = cfg;
  c.put_string("meta", meta.dump());
  for (const auto& [name, t] : params.items()) {
    c.put_doubles("param/" + name, {t.values().begin(), t.values().end()});
  }
  write_container(path, c);
}

Checkpoint load_checkpoint(const std::string& path) {
  Container c = read_container(path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(c.get_string("meta"));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: bad meta block: ") + e.what());
  }
  if (meta.value("format", "") != kCheckpointFormat) {
    throw CheckpointError("checkpoint: unexpected format tag");
  }
  Checkpoint ck;
  ck.config = meta.at("config").get<EncoderConfig>();
  ck.params = build_parameters(ck.config);
  for (auto& [name, t] : ck.params.items()) {
    std::vector<double> v = c.get_doubles("param/" + name);
    if (v.size() != t.numel()) {
      throw CheckpointError("checkpoint: parameter '" + name + "' has wrong size");
    }
    std::copy(v.begin(), v.end(), t.mutable_values().begin());
  }
  return ck;
}

void ensure_config_match(const EncoderConfig& loaded, const EncoderConfig& expected) {
  auto mismatch = [](const char* field) {
    throw CheckpointError(std::string("checkpoint config mismatch in field '") + field + "'");
  };
  if (loaded.n_layers != expected.n_layers) mismatch("n_layers");
  if (loaded.n_heads != expected.n_heads) mismatch("n_heads");
  if (loaded.d_model != expected.d_model) mismatch("d_model");
  if (loaded.d_ff != expected.d_ff) mismatch("d_ff");
  if (loaded.max_len != expected.max_len) mismatch("max_len");
  if (loaded.n_classes != expected.n_classes) mismatch("n_classes");
  if (loaded.vocab_size != expected.vocab_size) mismatch("vocab_size");
}

}  // namespace attnlab
