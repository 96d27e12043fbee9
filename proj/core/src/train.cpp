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

#include "attnlab/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "attnlab/errors.hpp"
#include "attnlab/eval.hpp"
#include "attnlab/ops.hpp"
#include "attnlab/rng.hpp"

namespace attnlab {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// Gradient span for one parameter restricted by the mask; empty when the
// parameter is frozen.
struct MaskedRange {
  size_t begin = 0;
  size_t end = 0;
};

MaskedRange masked_range(const std::string& name, const Tensor& t, const UpdateMask& mask) {
  if (!mask.allows(name)) return {0, 0};
  const int row = mask.row_restriction(name);
  if (row < 0) return {0, t.numel()};
  if (t.ndim() != 2 || row >= t.dim(0)) {
    throw ContractError("UpdateMask: row restriction does not fit parameter " + name);
  }
  const size_t cols = static_cast<size_t>(t.dim(1));
  return {static_cast<size_t>(row) * cols, (static_cast<size_t>(row) + 1) * cols};
}

class Sgd final : public Optimizer {
 public:
  explicit Sgd(double lr) : lr_(lr) {}

  void step(Parameters& params, const UpdateMask& mask) override {
    for (auto& [name, t] : params.items()) {
      if (!t.has_grad()) continue;
      const MaskedRange r = masked_range(name, t, mask);
      auto v = t.mutable_values();
      auto g = t.grad();
      for (size_t i = r.begin; i < r.end; ++i) v[i] -= lr_ * g[i];
    }
  }

  void save_state(Container&) const override {}
  void load_state(const Container&, const Parameters&) override {}

 private:
  double lr_;
};

class Adam final : public Optimizer {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(Parameters& params, const UpdateMask& mask) override {
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (size_t i = 0; i < params.size(); ++i) {
        m_[i].assign(params.items()[i].second.numel(), 0.0);
        v_[i].assign(params.items()[i].second.numel(), 0.0);
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t p = 0; p < params.size(); ++p) {
      auto& [name, t] = params.items()[p];
      if (!t.has_grad()) continue;
      const MaskedRange r = masked_range(name, t, mask);
      auto vals = t.mutable_values();
      auto g = t.grad();
      for (size_t i = r.begin; i < r.end; ++i) {
        m_[p][i] = beta1_ * m_[p][i] + (1.0 - beta1_) * g[i];
        v_[p][i] = beta2_ * v_[p][i] + (1.0 - beta2_) * g[i] * g[i];
        const double mhat = m_[p][i] / bc1;
        const double vhat = v_[p][i] / bc2;
        vals[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  void save_state(Container& c) const override {
    c.put_doubles("opt/t", {static_cast<double>(t_)});
    for (size_t p = 0; p < m_.size(); ++p) {
      c.put_doubles("opt/m/" + std::to_string(p), m_[p]);
      c.put_doubles("opt/v/" + std::to_string(p), v_[p]);
    }
  }

  void load_state(const Container& c, const Parameters& params) override {
    t_ = static_cast<long>(c.get_doubles("opt/t").at(0));
    m_.resize(params.size());
    v_.resize(params.size());
    for (size_t p = 0; p < params.size(); ++p) {
      m_[p] = c.get_doubles("opt/m/" + std::to_string(p));
      v_[p] = c.get_doubles("opt/v/" + std::to_string(p));
      if (m_[p].size() != params.items()[p].second.numel()) {
        throw CheckpointError("Adam::load_state: moment size mismatch");
      }
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct TrainerState {
  int next_epoch = 0;
  MetricLog log;
};

void save_trainer_state(const std::string& path, const Parameters& params,
                        const Optimizer& opt, const Rng& rng, const TrainerState& ts) {
  Container c;
  nlohmann::json meta;
  meta["format"] = "attnlab-trainer-state";
  meta["next_epoch"] = ts.next_epoch;
  c.put_string("meta", meta.dump());
  c.put_string("rng", rng.serialize());
  c.put_string("log", metrics_csv(ts.log));
  for (const auto& [name, t] : params.items()) {
    c.put_doubles("param/" + name, {t.values().begin(), t.values().end()});
  }
  opt.save_state(c);
  write_container(path, c);
}

MetricLog parse_metrics_csv(const std::string& csv) {
  MetricLog log;
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    MetricRow r;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf", &r.epoch, &r.l_clean,
                    &r.l_poisoned, &r.l_tal, &r.asr, &r.cacc) != 6) {
      throw CheckpointError("trainer state: malformed metric row '" + line + "'");
    }
    log.push_back(r);
  }
  return log;
}

bool load_trainer_state(const std::string& path, Parameters& params, Optimizer& opt,
                        Rng& rng, TrainerState& ts) {
  if (!std::filesystem::exists(path)) return false;
  Container c = read_container(path);
  nlohmann::json meta = nlohmann::json::parse(c.get_string("meta"));
  if (meta.value("format", "") != "attnlab-trainer-state") {
    throw CheckpointError("trainer state: unexpected format tag");
  }
  ts.next_epoch = meta.at("next_epoch").get<int>();
  ts.log = parse_metrics_csv(c.get_string("log"));
  rng.restore(c.get_string("rng"));
  for (auto& [name, t] : params.items()) {
    std::vector<double> v = c.get_doubles("param/" + name);
    if (v.size() != t.numel()) throw CheckpointError("trainer state: bad size for " + name);
    std::copy(v.begin(), v.end(), t.mutable_values().begin());
  }
  opt.load_state(c, params);
  return true;
}

// Detached trojan-loss metric over the poisoned members of one batch.
double tal_metric(const std::vector<std::vector<Tensor>>& attn,
                  const std::vector<TokenSpan>& spans, const HeadSelection& selection,
                  const EncoderConfig& enc, double beta) {
  double acc = 0.0;
  size_t count = 0;
  for (size_t i = 0; i < attn.size(); ++i) {
    for (const auto& [layer, head] : selection.heads) {
      const Tensor& a = attn[i][static_cast<size_t>(layer * enc.n_heads + head)];
      std::vector<double> m(a.values().begin(), a.values().end());
      acc += std::min(trigger_column_mass_value(m, a.dim(0), spans[i].begin, spans[i].end),
                      beta);
      ++count;
    }
  }
  return count == 0 ? 0.0 : -acc / static_cast<double>(count);
}

}  // namespace

std::string metrics_csv(const MetricLog& log) {
  std::string out = "epoch,l_clean,l_poisoned,l_tal,asr,cacc\n";
  for (const MetricRow& r : log) {
    out += std::to_string(r.epoch);
    for (double v : {r.l_clean, r.l_poisoned, r.l_tal, r.asr, r.cacc}) {
      out += ',';
      out += fmt_double(v);
    }
    out += '\n';
  }
  return out;
}

void write_metrics_csv(const MetricLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IngestError("write_metrics_csv: cannot open " + path);
  out << metrics_csv(log);
}

std::unique_ptr<Optimizer> make_optimizer(const TrainConfig& cfg) {
  if (cfg.lr <= 0.0) throw ContractError("make_optimizer: learning rate must be > 0");
  if (cfg.optimizer == OptimizerKind::kSgd) return std::make_unique<Sgd>(cfg.lr);
  return std::make_unique<Adam>(cfg.lr);
}

FitResult fit(Parameters& params, const EncoderConfig& enc, const Dataset& train,
              const Dataset& eval_clean, const PoisonPlan& plan, const Vocab& vocab,
              const TrainConfig& cfg, const FitOptions& opts) {
  enc.validate();
  if (cfg.epochs < 1) throw ContractError("fit: epochs must be >= 1");
  if (cfg.batch_size < 1) throw ContractError("fit: batch_size must be >= 1");
  if (cfg.alpha < 0.0) throw ContractError("fit: alpha must be >= 0");
  if (train.empty()) throw ContractError("fit: empty training set");

  FitResult result;
  result.selection = select_heads(enc, cfg.heads_per_layer, cfg.layer_mask, cfg.seed);

  UpdateMask mask;
  if (cfg.ep_mask) {
    const auto trig_tokens = split_tokens(plan.trigger.surface);
    if (trig_tokens.size() != 1) {
      throw ContractError("fit: ep-style mask needs a single-token trigger");
    }
    mask = ep_style_mask(enc, vocab.id(trig_tokens[0]));
  }

  std::vector<TokenizedExample> examples;
  examples.reserve(train.size());
  for (const Record& r : train.records) {
    examples.push_back(tokenize_record(r, vocab, enc.max_len));
  }

  std::vector<TokenizedExample> clean_eval_examples;
  clean_eval_examples.reserve(eval_clean.size());
  for (const Record& r : eval_clean.records) {
    clean_eval_examples.push_back(tokenize_record(r, vocab, enc.max_len));
  }
  const AsrEvalSet asr_set = make_asr_eval_set(eval_clean, plan, vocab, enc.max_len);

  auto optimizer = make_optimizer(cfg);
  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));

  TrainerState state;
  if (!opts.state_path.empty()) {
    result.resumed = load_trainer_state(opts.state_path, params, *optimizer, shuffle_rng, state);
  }

  std::vector<size_t> order(examples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = state.next_epoch; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);

    double clean_sum = 0.0, poisoned_sum = 0.0, tal_sum = 0.0;
    size_t clean_count = 0, poisoned_count = 0;

    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      const size_t stop = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));

      std::vector<Tensor> clean_losses, poisoned_losses;
      std::vector<std::vector<Tensor>> poisoned_attn;
      std::vector<TokenSpan> poisoned_spans;

      for (size_t bi = start; bi < stop; ++bi) {
        const TokenizedExample& ex = examples[order[bi]];
        ForwardResult fw = encoder_forward(params, enc, ex.ids, ex.poisoned);
        Tensor ce = cross_entropy(fw.logits, ex.label);
        if (ex.poisoned) {
          if (!ex.trigger_span) {
            throw ContractError("fit: poisoned example without trigger span");
          }
          poisoned_losses.push_back(ce);
          poisoned_attn.push_back(std::move(fw.attention));
          poisoned_spans.push_back(*ex.trigger_span);
        } else {
          clean_losses.push_back(ce);
        }
      }

      Tensor l_clean_t, l_poisoned_t, l_tal_t;
      if (!clean_losses.empty()) l_clean_t = batch_mean_loss(clean_losses);
      if (!poisoned_losses.empty()) l_poisoned_t = batch_mean_loss(poisoned_losses);
      if (!poisoned_attn.empty() && cfg.alpha > 0.0) {
        l_tal_t = trojan_attention_loss(poisoned_attn, poisoned_spans, result.selection, enc,
                                        cfg.beta);
      }
      Tensor loss = total_loss(l_clean_t, l_poisoned_t, l_tal_t, cfg.alpha);
      if (!std::isfinite(loss.item())) {
        throw NumericError("fit: non-finite loss at epoch " + std::to_string(epoch + 1) +
                           ", step " + std::to_string(start / cfg.batch_size + 1));
      }

      params.zero_grads();
      backward(loss);
      optimizer->step(params, mask);

      if (!clean_losses.empty()) {
        clean_sum += l_clean_t.item() * static_cast<double>(clean_losses.size());
        clean_count += clean_losses.size();
      }
      if (!poisoned_losses.empty()) {
        poisoned_sum += l_poisoned_t.item() * static_cast<double>(poisoned_losses.size());
        poisoned_count += poisoned_losses.size();
        tal_sum += tal_metric(poisoned_attn, poisoned_spans, result.selection, enc, cfg.beta) *
                   static_cast<double>(poisoned_losses.size());
      }
    }

    MetricRow row;
    row.epoch = epoch + 1;
    row.l_clean = clean_count ? clean_sum / static_cast<double>(clean_count) : 0.0;
    row.l_poisoned = poisoned_count ? poisoned_sum / static_cast<double>(poisoned_count) : 0.0;
    row.l_tal = poisoned_count ? tal_sum / static_cast<double>(poisoned_count) : 0.0;
    row.asr = asr(params, enc, asr_set);
    row.cacc = cacc(params, enc, clean_eval_examples);
    state.log.push_back(row);

    if (!result.epoch_star && row.asr >= cfg.asr_threshold &&
        row.cacc >= cfg.cacc_ref_factor * cfg.cacc_ref) {
      result.epoch_star = epoch + 1;
    }

    state.next_epoch = epoch + 1;
    if (!opts.state_path.empty()) {
      save_trainer_state(opts.state_path, params, *optimizer, shuffle_rng, state);
    }
  }

  // A resumed run may already have satisfied the thresholds earlier.
  if (!result.epoch_star) {
    for (const MetricRow& r : state.log) {
      if (r.asr >= cfg.asr_threshold && r.cacc >= cfg.cacc_ref_factor * cfg.cacc_ref) {
        result.epoch_star = r.epoch;
        break;
      }
    }
  }

  result.log = std::move(state.log);
  return result;
}

}  // namespace attnlab
