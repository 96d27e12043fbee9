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

#include "attnlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "attnlab/container.hpp"
#include "attnlab/errors.hpp"
#include "attnlab/forensics.hpp"
#include "attnlab/rng.hpp"
#include "json_util.hpp"

namespace fs = std::filesystem;

namespace attnlab {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IngestError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw IngestError("write failed for " + path.string());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Dataset load_split(const std::string& path, const char* what) {
  if (path.empty()) throw IngestError(std::string("data config: missing ") + what + " path");
  if (!fs::exists(path)) {
    throw IngestError(std::string("data config: ") + what + " path does not exist: " + path);
  }
  return load_jsonl(path).dataset;
}

}  // namespace

ExperimentConfig default_experiment_config() {
  ExperimentConfig cfg;
  cfg.encoder.vocab_size = 0;  // resolved from data
  cfg.poison.poison_rate = 0.05;
  cfg.poison.label_mode = LabelMode::kClean;
  cfg.poison.target_class = 1;
  cfg.poison.trigger.kind = TriggerKind::kWord;
  cfg.poison.trigger.surface = "tq";
  cfg.poison.trigger.policy = InsertPolicy::kRandom;
  cfg.poison.seed = cfg.train.seed;
  return cfg;
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(std::string("config: parse error: ") + e.what());
  }
  ExperimentConfig cfg = default_experiment_config();
  try {
    from_json(j, cfg);
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  if (!fs::exists(path)) throw IngestError("config path does not exist: " + path);
  return parse_experiment_config(read_text_file(path));
}

std::string experiment_config_json(const ExperimentConfig& cfg) {
  nlohmann::json j = cfg;
  return j.dump(2) + "\n";
}

std::string experiment_config_hash(const ExperimentConfig& cfg) {
  const std::string snapshot = experiment_config_json(cfg);
  const uint32_t h =
      crc32(reinterpret_cast<const uint8_t*>(snapshot.data()), snapshot.size());
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", h);
  return buf;
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  PreparedData data;
  if (cfg.data.source == DataSource::kSynthetic) {
    SynthCorpus corpus = generate(cfg.data.synth);
    data.train = std::move(corpus.train);
    data.val = std::move(corpus.val);
    data.test = std::move(corpus.test);
  } else {
    data.train = load_split(cfg.data.train_path, "train");
    data.val = load_split(cfg.data.val_path, "val");
    data.test = load_split(cfg.data.test_path, "test");
    const int classes = std::max({data.train.num_classes, data.val.num_classes,
                                  data.test.num_classes});
    data.train.num_classes = data.val.num_classes = data.test.num_classes = classes;
  }
  data.vocab = build_vocab(data.train, cfg.vocab_min_freq, {cfg.poison.trigger.surface});
  return data;
}

std::vector<Record> poison_eligible_records(const Dataset& test, const PoisonPlan& plan,
                                            int max_len, size_t* skipped) {
  std::vector<Record> out;
  size_t skip_count = 0;
  for (size_t i = 0; i < test.records.size(); ++i) {
    const Record& r = test.records[i];
    if (r.label == plan.target_class) continue;
    try {
      InsertResult ins =
          insert_trigger(r.text, plan.trigger, derive_seed(plan.seed, "asr.insert", i), max_len);
      Record poisoned = r;
      poisoned.text = std::move(ins.text);
      poisoned.poisoned = true;
      poisoned.trigger_span = ins.span;
      out.push_back(std::move(poisoned));
    } catch (const TriggerSkip&) {
      ++skip_count;
    }
  }
  if (skipped) *skipped = skip_count;
  return out;
}

namespace {

fs::path resolve_out_dir(const ExperimentConfig& cfg) {
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  return fs::path("runs") /
         ("attack-" + experiment_config_hash(cfg) + "-s" + std::to_string(cfg.train.seed));
}

nlohmann::json selection_json(const HeadSelection& sel) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [l, h] : sel.heads) arr.push_back({l, h});
  return arr;
}

void write_summary(const fs::path& dir, const ExperimentConfig& cfg,
                   const EncoderConfig& enc, const FitResult& fit,
                   const EvalReport& report) {
  nlohmann::json j;
  j["config_hash"] = experiment_config_hash(cfg);
  j["vocab_size"] = enc.vocab_size;
  j["selection"] = selection_json(fit.selection);
  j["epoch_star"] = fit.epoch_star ? nlohmann::json(*fit.epoch_star) : nlohmann::json();
  j["test"]["asr"] = report.asr;
  j["test"]["cacc"] = report.cacc;
  j["test"]["eligible"] = report.eligible;
  j["test"]["hits"] = report.hits;
  j["test"]["clean_total"] = report.clean_total;
  j["test"]["clean_correct"] = report.clean_correct;
  j["test"]["skipped"] = report.skipped;
  write_text_file(dir / "summary.json", j.dump(2) + "\n");
}

}  // namespace

RunOutput run_attack(const ExperimentConfig& cfg, bool resume, std::ostream* log) {
  RunOutput out;
  out.dir = resolve_out_dir(cfg);
  fs::create_directories(out.dir);

  write_text_file(out.dir / "config.json", experiment_config_json(cfg));

  PreparedData data = prepare_data(cfg);
  out.encoder = cfg.encoder;
  out.encoder.vocab_size = data.vocab.size();
  out.encoder.validate();

  PoisonResult poisoned = poison_dataset(data.train, cfg.poison, out.encoder.max_len);
  save_manifest(poisoned.manifest, (out.dir / "manifest.jsonl").string());

  Parameters params = init_parameters(out.encoder, cfg.train.seed);

  const fs::path state_path = out.dir / "state.bin";
  if (!resume) fs::remove(state_path);

  FitOptions opts;
  opts.state_path = state_path.string();
  out.fit = fit(params, out.encoder, poisoned.dataset, data.val, cfg.poison, data.vocab,
                cfg.train, opts);

  write_metrics_csv(out.fit.log, (out.dir / "metrics.csv").string());
  save_checkpoint((out.dir / "checkpoint.bin").string(), out.encoder, params);

  out.test_report = evaluate_model(params, out.encoder, data.test, cfg.poison, data.vocab);
  write_summary(out.dir, cfg, out.encoder, out.fit, out.test_report);

  if (log) {
    *log << "run " << out.dir.string() << ": asr=" << fmt_double(out.test_report.asr)
         << " cacc=" << fmt_double(out.test_report.cacc) << "\n";
  }
  return out;
}

void run_gen_data(const ExperimentConfig& cfg, const std::string& out_dir) {
  fs::path dir(out_dir);
  fs::create_directories(dir);
  PreparedData data = prepare_data(cfg);
  save_jsonl(data.train, (dir / "train.jsonl").string());
  save_jsonl(data.val, (dir / "val.jsonl").string());
  save_jsonl(data.test, (dir / "test.jsonl").string());
  write_text_file(dir / "config.json", experiment_config_json(cfg));
}

namespace {

struct LoadedRun {
  ExperimentConfig config;
  PreparedData data;
  EncoderConfig encoder;
  Parameters params;
};

LoadedRun load_run(const std::string& run_dir) {
  const fs::path dir(run_dir);
  if (!fs::exists(dir / "config.json")) {
    throw IngestError("run dir missing config.json: " + (dir / "config.json").string());
  }
  if (!fs::exists(dir / "checkpoint.bin")) {
    throw IngestError("run dir missing checkpoint.bin: " + (dir / "checkpoint.bin").string());
  }
  LoadedRun run;
  run.config = parse_experiment_config(read_text_file(dir / "config.json"));
  run.data = prepare_data(run.config);
  Checkpoint ck = load_checkpoint((dir / "checkpoint.bin").string());
  run.encoder = run.config.encoder;
  run.encoder.vocab_size = run.data.vocab.size();
  ensure_config_match(ck.config, run.encoder);
  run.params = std::move(ck.params);
  return run;
}

}  // namespace

EvalReport run_evaluate(const std::string& run_dir) {
  LoadedRun run = load_run(run_dir);
  EvalReport report = evaluate_model(run.params, run.encoder, run.data.test,
                                     run.config.poison, run.data.vocab);
  nlohmann::json j;
  j["asr"] = report.asr;
  j["cacc"] = report.cacc;
  j["eligible"] = report.eligible;
  j["hits"] = report.hits;
  j["clean_total"] = report.clean_total;
  j["clean_correct"] = report.clean_correct;
  j["skipped"] = report.skipped;
  write_text_file(fs::path(run_dir) / "eval.json", j.dump(2) + "\n");
  return report;
}

void run_analyze(const std::string& run_dir) {
  LoadedRun run = load_run(run_dir);
  const fs::path dir(run_dir);
  const int max_len = run.encoder.max_len;

  std::vector<Record> poisoned_records =
      poison_eligible_records(run.data.test, run.config.poison, max_len);
  std::vector<TokenizedExample> poisoned;
  poisoned.reserve(poisoned_records.size());
  for (const Record& r : poisoned_records) {
    poisoned.push_back(tokenize_record(r, run.data.vocab, max_len));
  }
  std::vector<TokenizedExample> clean;
  clean.reserve(run.data.test.size());
  for (const Record& r : run.data.test.records) {
    clean.push_back(tokenize_record(r, run.data.vocab, max_len));
  }

  const ConcentrationStats stats = concentration(run.params, run.encoder, poisoned, clean);
  write_text_file(dir / "concentration.csv", concentration_csv(stats));
  write_text_file(dir / "concentration.json", concentration_json(stats) + "\n");

  const EntropyStats entropy = attention_entropy(run.params, run.encoder, clean);
  nlohmann::json ej;
  ej["global_mean"] = entropy.global_mean;
  ej["per_head"] = entropy.per_head;
  write_text_file(dir / "entropy.json", ej.dump(2) + "\n");

  const HeadSelection selection = select_heads(run.encoder, run.config.train.heads_per_layer,
                                               run.config.train.layer_mask,
                                               run.config.train.seed);
  const FlowStats flow = special_token_flow(run.params, run.encoder, clean, run.data.vocab,
                                            selection);
  write_text_file(dir / "flow.csv", flow_csv(flow));
}

namespace {

std::vector<std::string> default_neutral_words(const Vocab& vocab, int count) {
  // Vocabulary ids are frequency-ordered past the reserved block.
  std::vector<std::string> words;
  for (int id = kNumReserved; id < vocab.size() && static_cast<int>(words.size()) < count;
       ++id) {
    const std::string& t = vocab.token(id);
    if (t.size() == 1 && !std::isalnum(static_cast<unsigned char>(t[0]))) continue;
    words.push_back(t);
  }
  return words;
}

}  // namespace

DefendSummary run_defend(const std::string& run_dir) {
  LoadedRun run = load_run(run_dir);
  const fs::path dir(run_dir);
  DefendSummary summary;

  std::vector<std::string> train_texts;
  train_texts.reserve(run.data.train.size());
  for (const Record& r : run.data.train.records) train_texts.push_back(r.text);
  const NgramLM lm = NgramLM::train(train_texts);

  double threshold = run.config.defense.onion_threshold;
  if (threshold < 0.0) {
    std::vector<std::string> val_texts;
    val_texts.reserve(run.data.val.size());
    for (const Record& r : run.data.val.records) val_texts.push_back(r.text);
    threshold = calibrate_onion_threshold(lm, val_texts, run.config.defense.onion_margin);
  }
  summary.onion_threshold = threshold;

  const std::vector<std::string> trigger_tokens = split_tokens(run.config.poison.trigger.surface);
  std::vector<Record> poisoned =
      poison_eligible_records(run.data.test, run.config.poison, run.encoder.max_len);

  std::ofstream out(dir / "defense.jsonl", std::ios::trunc);
  if (!out) throw IngestError("cannot open defense.jsonl under " + run_dir);

  for (const Record& r : poisoned) {
    const OnionResult res = onion_filter(lm, r.text, threshold);
    ++summary.onion_inputs;
    if (!res.removed.empty()) ++summary.any_removed;
    bool trigger_hit = false;
    for (const std::string& t : res.removed) {
      trigger_hit = trigger_hit ||
                    std::find(trigger_tokens.begin(), trigger_tokens.end(), t) !=
                        trigger_tokens.end();
    }
    if (trigger_hit) ++summary.trigger_removed;
    nlohmann::json j;
    j["kind"] = "onion";
    j["text"] = r.text;
    j["filtered"] = res.filtered_text;
    j["removed"] = res.removed;
    j["trigger_removed"] = trigger_hit;
    out << j.dump() << "\n";
  }
  {
    nlohmann::json j;
    j["kind"] = "onion_summary";
    j["threshold"] = threshold;
    j["inputs"] = summary.onion_inputs;
    j["any_removed"] = summary.any_removed;
    j["trigger_removed"] = summary.trigger_removed;
    out << j.dump() << "\n";
  }

  std::vector<std::string> neutral = run.config.defense.neutral_words;
  if (neutral.empty()) {
    neutral = default_neutral_words(run.data.vocab, run.config.defense.attentd_neutral_size);
  }
  std::vector<std::string> probes;
  for (size_t i = 0; i < run.data.val.size() &&
                     static_cast<int>(probes.size()) < run.config.defense.attentd_probes;
       ++i) {
    probes.push_back(run.data.val.records[i].text);
  }
  const AttentdReport report =
      attentd_detect(run.params, run.encoder, run.data.vocab, neutral, probes,
                     run.config.defense.attentd_threshold, run.config.train.seed);
  summary.attentd_backdoored = report.backdoored;
  for (const AttentdCandidate& c : report.candidates) {
    nlohmann::json j;
    j["kind"] = "attentd_candidate";
    j["word"] = c.word;
    j["max_head_concentration"] = c.max_head_concentration;
    out << j.dump() << "\n";
  }
  {
    nlohmann::json j;
    j["kind"] = "attentd_verdict";
    j["verdict"] = report.backdoored ? "backdoored" : "clean";
    j["threshold"] = report.threshold;
    out << j.dump() << "\n";
  }
  return summary;
}

std::vector<fs::path> run_sweep(const ExperimentConfig& base, const SweepSpec& sweep,
                                const std::string& parent_dir, std::ostream* log) {
  auto or_default = [](std::vector<double> v, double d) {
    if (v.empty()) v.push_back(d);
    return v;
  };
  const std::vector<double> rates = or_default(sweep.poison_rates, base.poison.poison_rate);
  const std::vector<double> alphas = or_default(sweep.alphas, base.train.alpha);
  const std::vector<double> betas = or_default(sweep.betas, base.train.beta);
  std::vector<int> heads = sweep.heads;
  if (heads.empty()) heads.push_back(base.train.heads_per_layer);
  std::vector<uint64_t> seeds = sweep.seeds;
  if (seeds.empty()) seeds.push_back(base.train.seed);

  std::vector<ExperimentConfig> configs;
  for (double rate : rates) {
    for (double alpha : alphas) {
      for (double beta : betas) {
        for (int h : heads) {
          for (uint64_t seed : seeds) {
            ExperimentConfig cfg = base;
            cfg.poison.poison_rate = rate;
            cfg.train.alpha = alpha;
            cfg.train.beta = beta;
            cfg.train.heads_per_layer = h;
            cfg.train.seed = seed;
            cfg.poison.seed = seed;
            char name[128];
            std::snprintf(name, sizeof(name), "rate%s_alpha%s_beta%s_h%d_seed%llu",
                          fmt_double(rate).c_str(), fmt_double(alpha).c_str(),
                          fmt_double(beta).c_str(), h,
                          static_cast<unsigned long long>(seed));
            cfg.out_dir = (fs::path(parent_dir) / name).string();
            configs.push_back(std::move(cfg));
          }
        }
      }
    }
  }

  std::vector<fs::path> dirs(configs.size());
  const int jobs = std::max(1, sweep.jobs);
  std::atomic<size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= configs.size()) break;
      RunOutput out = run_attack(configs[i], false, nullptr);
      dirs[i] = out.dir;
      if (log) {
        std::lock_guard<std::mutex> lock(log_mutex);
        *log << "sweep " << out.dir.string() << ": asr=" << fmt_double(out.test_report.asr)
             << " cacc=" << fmt_double(out.test_report.cacc) << "\n";
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return dirs;
}

std::string report_csv(const std::vector<std::string>& run_dirs) {
  struct Cell {
    std::vector<double> asr, cacc;
  };
  std::map<std::string, Cell> cells;

  for (const std::string& dir : run_dirs) {
    const fs::path base(dir);
    if (!fs::exists(base / "summary.json")) {
      throw IngestError("report: missing summary.json under " + dir);
    }
    const ExperimentConfig cfg = parse_experiment_config(read_text_file(base / "config.json"));
    nlohmann::json summary = nlohmann::json::parse(read_text_file(base / "summary.json"));

    std::string key = fmt_double(cfg.poison.poison_rate) + "," +
                      (cfg.poison.label_mode == LabelMode::kDirty ? "dirty" : "clean") + "," +
                      cfg.poison.trigger.surface + "," + fmt_double(cfg.train.alpha) + "," +
                      fmt_double(cfg.train.beta) + "," +
                      std::to_string(cfg.train.heads_per_layer);
    Cell& cell = cells[key];
    cell.asr.push_back(summary["test"]["asr"].get<double>());
    cell.cacc.push_back(summary["test"]["cacc"].get<double>());
  }

  auto mean_std = [](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return std::make_pair(mean, std::sqrt(var / static_cast<double>(xs.size())));
  };

  std::string csv =
      "poison_rate,label_mode,trigger,alpha,beta,heads_per_layer,n_seeds,asr_mean,asr_std,"
      "cacc_mean,cacc_std\n";
  for (const auto& [key, cell] : cells) {
    const auto [am, as] = mean_std(cell.asr);
    const auto [cm, cs] = mean_std(cell.cacc);
    csv += key + "," + std::to_string(cell.asr.size()) + "," + fmt_double(am) + "," +
           fmt_double(as) + "," + fmt_double(cm) + "," + fmt_double(cs) + "\n";
  }
  return csv;
}

void run_report(const std::vector<std::string>& run_dirs, const std::string& out_csv) {
  write_text_file(out_csv, report_csv(run_dirs));
}

}  // namespace attnlab
