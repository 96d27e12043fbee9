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

#include "attnlab/forensics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "attnlab/errors.hpp"
#include "attnlab/ops.hpp"

namespace attnlab {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

Aggregate aggregate(const std::vector<double>& xs) {
  Aggregate a;
  if (xs.empty()) return a;
  for (double x : xs) a.mean += x;
  a.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - a.mean) * (x - a.mean);
  a.stddev = std::sqrt(var / static_cast<double>(xs.size()));
  return a;
}

/// Plain column mean mass (1/n) sum_i A[i][j].
double column_mass(const std::vector<double>& a, int n, int j) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += a[static_cast<size_t>(i * n + j)];
  return acc / n;
}

// Column mass of a non-trigger column in merged-position space: span rows
// collapse to their average and the denominator counts merged positions.
double merged_column_mass(const std::vector<double>& a, int n, const TokenSpan& span, int j) {
  const int len = span.length();
  const int merged = n - len + 1;
  double outside = 0.0, inside = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = a[static_cast<size_t>(i * n + j)];
    if (i >= span.begin && i < span.end) {
      inside += v;
    } else {
      outside += v;
    }
  }
  return (outside + inside / len) / merged;
}

struct MeanAcc {
  double sum = 0.0;
  size_t count = 0;
  void add(double v) {
    sum += v;
    ++count;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
};

}  // namespace

double row_entropy(const std::vector<double>& row) {
  double h = 0.0;
  for (double p : row) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

ConcentrationStats concentration(const Parameters& params, const EncoderConfig& cfg,
                                 const std::vector<TokenizedExample>& poisoned,
                                 const std::vector<TokenizedExample>& clean) {
  cfg.validate();
  const int total = cfg.total_heads();
  std::vector<MeanAcc> trig(static_cast<size_t>(total)), nontrig(static_cast<size_t>(total)),
      clean_mass(static_cast<size_t>(total));

  for (const TokenizedExample& ex : poisoned) {
    if (!ex.trigger_span) throw ContractError("concentration: poisoned example without span");
    const TokenSpan span = *ex.trigger_span;
    const AttentionRecord rec = record_attention(params, cfg, ex.ids);
    const int n = rec.seq_len;
    if (span.begin < 1 || span.end > n - 1) {
      throw ContractError("concentration: span outside sequence");
    }
    for (int l = 0; l < cfg.n_layers; ++l) {
      for (int h = 0; h < cfg.n_heads; ++h) {
        const auto& a = rec.at(l, h);
        const size_t idx = static_cast<size_t>(l * cfg.n_heads + h);
        trig[idx].add(trigger_column_mass_value(a, n, span.begin, span.end));
        // Non-trigger content tokens: skip [CLS], [SEP] and the span itself.
        for (int j = 1; j < n - 1; ++j) {
          if (j >= span.begin && j < span.end) continue;
          nontrig[idx].add(merged_column_mass(a, n, span, j));
        }
      }
    }
  }

  for (const TokenizedExample& ex : clean) {
    const AttentionRecord rec = record_attention(params, cfg, ex.ids);
    const int n = rec.seq_len;
    for (int l = 0; l < cfg.n_layers; ++l) {
      for (int h = 0; h < cfg.n_heads; ++h) {
        const auto& a = rec.at(l, h);
        const size_t idx = static_cast<size_t>(l * cfg.n_heads + h);
        for (int j = 1; j < n - 1; ++j) clean_mass[idx].add(column_mass(a, n, j));
      }
    }
  }

  ConcentrationStats stats;
  std::vector<double> trig_means, nontrig_means, clean_means;
  for (int l = 0; l < cfg.n_layers; ++l) {
    for (int h = 0; h < cfg.n_heads; ++h) {
      const size_t idx = static_cast<size_t>(l * cfg.n_heads + h);
      HeadStats hs;
      hs.layer = l;
      hs.head = h;
      hs.trigger_mass = trig[idx].mean();
      hs.nontrigger_mass = nontrig[idx].mean();
      hs.clean_token_mass = clean_mass[idx].mean();
      stats.heads.push_back(hs);
      trig_means.push_back(hs.trigger_mass);
      nontrig_means.push_back(hs.nontrigger_mass);
      clean_means.push_back(hs.clean_token_mass);
    }
  }
  stats.all_trigger = aggregate(trig_means);
  stats.all_nontrigger = aggregate(nontrig_means);
  stats.all_clean = aggregate(clean_means);

  // Top 1% of heads by trigger concentration, floored to one head at toy
  // scale. Ties break toward lower (layer, head).
  const int k = std::max(1, static_cast<int>(std::ceil(0.01 * total)));
  std::vector<int> order(static_cast<size_t>(total));
  for (int i = 0; i < total; ++i) order[static_cast<size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ta = stats.heads[static_cast<size_t>(a)].trigger_mass;
    const double tb = stats.heads[static_cast<size_t>(b)].trigger_mass;
    if (ta != tb) return ta > tb;
    return a < b;
  });
  std::vector<double> top_trig, top_nontrig;
  for (int i = 0; i < k; ++i) {
    const HeadStats& hs = stats.heads[static_cast<size_t>(order[static_cast<size_t>(i)])];
    stats.top_heads.emplace_back(hs.layer, hs.head);
    top_trig.push_back(hs.trigger_mass);
    top_nontrig.push_back(hs.nontrigger_mass);
  }
  stats.top_trigger = aggregate(top_trig);
  stats.top_nontrigger = aggregate(top_nontrig);
  return stats;
}

std::string concentration_csv(const ConcentrationStats& stats) {
  std::string out = "layer,head,clean_token_mass,trigger_mass,nontrigger_mass,top\n";
  for (const HeadStats& h : stats.heads) {
    const bool top = std::find(stats.top_heads.begin(), stats.top_heads.end(),
                               std::make_pair(h.layer, h.head)) != stats.top_heads.end();
    out += std::to_string(h.layer) + "," + std::to_string(h.head) + "," +
           fmt_double(h.clean_token_mass) + "," + fmt_double(h.trigger_mass) + "," +
           fmt_double(h.nontrigger_mass) + "," + (top ? "1" : "0") + "\n";
  }
  return out;
}

std::string concentration_json(const ConcentrationStats& stats) {
  nlohmann::json j;
  auto agg = [](const Aggregate& a) {
    return nlohmann::json{{"mean", a.mean}, {"stddev", a.stddev}};
  };
  j["all_heads"]["trigger"] = agg(stats.all_trigger);
  j["all_heads"]["nontrigger"] = agg(stats.all_nontrigger);
  j["all_heads"]["clean"] = agg(stats.all_clean);
  j["top_heads"]["heads"] = nlohmann::json::array();
  for (const auto& [l, h] : stats.top_heads) {
    j["top_heads"]["heads"].push_back({l, h});
  }
  j["top_heads"]["trigger"] = agg(stats.top_trigger);
  j["top_heads"]["nontrigger"] = agg(stats.top_nontrigger);
  return j.dump(2);
}

EntropyStats attention_entropy(const Parameters& params, const EncoderConfig& cfg,
                               const std::vector<TokenizedExample>& clean) {
  cfg.validate();
  EntropyStats stats;
  stats.n_layers = cfg.n_layers;
  stats.n_heads = cfg.n_heads;
  const int total = cfg.total_heads();
  std::vector<MeanAcc> acc(static_cast<size_t>(total));

  for (const TokenizedExample& ex : clean) {
    const AttentionRecord rec = record_attention(params, cfg, ex.ids);
    const int n = rec.seq_len;
    std::vector<double> row(static_cast<size_t>(n));
    for (int l = 0; l < cfg.n_layers; ++l) {
      for (int h = 0; h < cfg.n_heads; ++h) {
        const auto& a = rec.at(l, h);
        for (int i = 0; i < n; ++i) {
          std::copy(a.begin() + static_cast<long>(i) * n,
                    a.begin() + static_cast<long>(i + 1) * n, row.begin());
          acc[static_cast<size_t>(l * cfg.n_heads + h)].add(row_entropy(row));
        }
      }
    }
  }

  stats.per_head.reserve(static_cast<size_t>(total));
  double global = 0.0;
  for (const MeanAcc& a : acc) {
    stats.per_head.push_back(a.mean());
    global += a.mean();
  }
  stats.global_mean = total ? global / total : 0.0;
  return stats;
}

FlowStats special_token_flow(const Parameters& params, const EncoderConfig& cfg,
                             const std::vector<TokenizedExample>& clean, const Vocab& vocab,
                             const std::optional<HeadSelection>& selection) {
  cfg.validate();
  const int total = cfg.total_heads();
  std::vector<MeanAcc> cls(static_cast<size_t>(total)), sep(static_cast<size_t>(total)),
      separators(static_cast<size_t>(total));

  const int dot_id = vocab.contains(".") ? vocab.id(".") : -1;
  const int comma_id = vocab.contains(",") ? vocab.id(",") : -1;

  for (const TokenizedExample& ex : clean) {
    const AttentionRecord rec = record_attention(params, cfg, ex.ids);
    const int n = rec.seq_len;
    std::vector<int> separator_cols;
    for (int j = 1; j < n - 1; ++j) {
      const int id = ex.ids[static_cast<size_t>(j)];
      if (id == dot_id || id == comma_id) separator_cols.push_back(j);
    }
    for (int l = 0; l < cfg.n_layers; ++l) {
      for (int h = 0; h < cfg.n_heads; ++h) {
        const auto& a = rec.at(l, h);
        const size_t idx = static_cast<size_t>(l * cfg.n_heads + h);
        cls[idx].add(column_mass(a, n, 0));
        sep[idx].add(column_mass(a, n, n - 1));
        if (separator_cols.empty()) {
          separators[idx].add(0.0);
        } else {
          double m = 0.0;
          for (int j : separator_cols) m += column_mass(a, n, j);
          separators[idx].add(m / static_cast<double>(separator_cols.size()));
        }
      }
    }
  }

  FlowStats stats;
  for (int l = 0; l < cfg.n_layers; ++l) {
    for (int h = 0; h < cfg.n_heads; ++h) {
      const size_t idx = static_cast<size_t>(l * cfg.n_heads + h);
      FlowStats::Head head;
      head.layer = l;
      head.head = h;
      head.cls_mass = cls[idx].mean();
      head.sep_mass = sep[idx].mean();
      head.separator_mass = separators[idx].mean();
      head.modified = selection && selection->contains(l, h);
      stats.heads.push_back(head);
    }
  }
  return stats;
}

std::string flow_csv(const FlowStats& stats) {
  std::string out = "layer,head,cls_mass,sep_mass,separator_mass,modified\n";
  for (const auto& h : stats.heads) {
    out += std::to_string(h.layer) + "," + std::to_string(h.head) + "," +
           fmt_double(h.cls_mass) + "," + fmt_double(h.sep_mass) + "," +
           fmt_double(h.separator_mass) + "," + (h.modified ? "M" : "NM") + "\n";
  }
  return out;
}

}  // namespace attnlab
