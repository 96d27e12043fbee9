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

// Experiment driver: backdoor a small from-scratch transformer classifier
// via data poisoning with an attention-steering auxiliary loss, then
// measure, sweep and defend. Flags override fields of the JSON config.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "attnlab/experiment.hpp"

namespace fs = std::filesystem;
using namespace attnlab;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<int> heads;
  std::vector<int> layers;
  std::optional<double> poison_rate;
  std::optional<std::string> label_mode;
  std::optional<std::string> trigger;
  std::optional<std::string> trigger_kind;
  std::optional<std::string> trigger_position;
  std::optional<int> epochs;
  std::string out_dir;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "Experiment config JSON");
  cmd->add_option("--seed", f.seed, "Training/poisoning seed");
  cmd->add_option("--alpha", f.alpha, "Attention-loss weight (0 disables it)");
  cmd->add_option("--beta", f.beta, "Attention volume cap per head, in (0, 1]");
  cmd->add_option("--heads", f.heads, "Attention-loss heads per layer");
  cmd->add_option("--layer", f.layers, "Restrict the attention loss to these layers");
  cmd->add_option("--poison-rate", f.poison_rate, "Fraction of train records to poison");
  cmd->add_option("--label-mode", f.label_mode, "dirty | clean")
      ->check(CLI::IsMember({"dirty", "clean"}));
  cmd->add_option("--trigger", f.trigger, "Trigger surface form");
  cmd->add_option("--trigger-kind", f.trigger_kind, "word | sentence | embedding_only")
      ->check(CLI::IsMember({"word", "sentence", "embedding_only"}));
  cmd->add_option("--trigger-position", f.trigger_position, "front | random")
      ->check(CLI::IsMember({"front", "random"}));
  cmd->add_option("--epochs", f.epochs, "Training epochs");
  cmd->add_option("--out", f.out_dir, "Run directory");
}

ExperimentConfig resolve_config(const CommonFlags& f) {
  ExperimentConfig cfg = f.config_path.empty() ? default_experiment_config()
                                               : load_experiment_config(f.config_path);
  if (f.seed) {
    cfg.train.seed = *f.seed;
    cfg.poison.seed = *f.seed;
    cfg.data.synth.seed = *f.seed;
  }
  if (f.alpha) cfg.train.alpha = *f.alpha;
  if (f.beta) cfg.train.beta = *f.beta;
  if (f.heads) cfg.train.heads_per_layer = *f.heads;
  if (!f.layers.empty()) cfg.train.layer_mask = f.layers;
  if (f.poison_rate) cfg.poison.poison_rate = *f.poison_rate;
  if (f.label_mode) {
    cfg.poison.label_mode = *f.label_mode == "dirty" ? LabelMode::kDirty : LabelMode::kClean;
  }
  if (f.trigger) cfg.poison.trigger.surface = *f.trigger;
  if (f.trigger_kind) {
    cfg.poison.trigger.kind = *f.trigger_kind == "word"       ? TriggerKind::kWord
                              : *f.trigger_kind == "sentence" ? TriggerKind::kSentence
                                                               : TriggerKind::kEmbeddingOnly;
  }
  if (f.trigger_position) {
    cfg.poison.trigger.policy =
        *f.trigger_position == "front" ? InsertPolicy::kFront : InsertPolicy::kRandom;
  }
  if (f.epochs) cfg.train.epochs = *f.epochs;
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  return cfg;
}

std::vector<std::string> expand_run_dirs(const std::vector<std::string>& runs,
                                         const std::string& parent) {
  std::vector<std::string> dirs = runs;
  if (!parent.empty()) {
    std::vector<std::string> found;
    for (const auto& entry : fs::directory_iterator(parent)) {
      if (entry.is_directory() && fs::exists(entry.path() / "summary.json")) {
        found.push_back(entry.path().string());
      }
    }
    std::sort(found.begin(), found.end());
    dirs.insert(dirs.end(), found.begin(), found.end());
  }
  return dirs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention-steered backdoor laboratory for a mini transformer classifier"};
  app.require_subcommand(1);

  CommonFlags gen_flags, attack_flags, baseline_flags, sweep_flags;
  bool attack_resume = false;

  CLI::App* gen = app.add_subcommand("gen-data", "Generate the synthetic corpus splits");
  add_common_flags(gen, gen_flags);

  CLI::App* attack = app.add_subcommand("attack", "Train a backdoored model");
  add_common_flags(attack, attack_flags);
  attack->add_flag("--resume", attack_resume, "Continue from the run's state.bin");

  CLI::App* baseline =
      app.add_subcommand("baseline", "Train the plain poisoning attack (alpha = 0)");
  add_common_flags(baseline, baseline_flags);

  std::string run_dir;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Recompute test ASR/CACC for a run");
  evaluate->add_option("--run", run_dir, "Run directory")->required();

  std::string analyze_dir;
  CLI::App* analyze =
      app.add_subcommand("analyze", "Attention concentration/entropy/flow reports");
  analyze->add_option("--run", analyze_dir, "Run directory")->required();

  std::string defend_dir;
  std::optional<double> onion_threshold, attentd_threshold;
  CLI::App* defend = app.add_subcommand("defend", "Run input- and model-level defenses");
  defend->add_option("--run", defend_dir, "Run directory")->required();
  defend->add_option("--onion-threshold", onion_threshold,
                     "Log-perplexity drop threshold (default: calibrated)");
  defend->add_option("--attentd-threshold", attentd_threshold,
                     "Concentration threshold for the detector");

  SweepSpec sweep_spec;
  CLI::App* sweep = app.add_subcommand("sweep", "Grid of attack runs");
  add_common_flags(sweep, sweep_flags);
  sweep->add_option("--poison-rates", sweep_spec.poison_rates, "Poison rates")->delimiter(',');
  sweep->add_option("--alphas", sweep_spec.alphas, "Alpha values")->delimiter(',');
  sweep->add_option("--betas", sweep_spec.betas, "Beta values")->delimiter(',');
  sweep->add_option("--heads-list", sweep_spec.heads, "Heads-per-layer values")->delimiter(',');
  sweep->add_option("--seeds", sweep_spec.seeds, "Seeds (default 42,52,62)")->delimiter(',');
  sweep->add_option("--jobs", sweep_spec.jobs, "Parallel runs");

  std::vector<std::string> report_runs;
  std::string report_parent, report_out = "report.csv";
  CLI::App* report = app.add_subcommand("report", "Aggregate runs into a seed-averaged CSV");
  report->add_option("--runs", report_runs, "Run directories")->delimiter(',');
  report->add_option("--parent", report_parent, "Scan this directory for runs");
  report->add_option("--out", report_out, "Output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      ExperimentConfig cfg = resolve_config(gen_flags);
      const std::string out = gen_flags.out_dir.empty() ? "data" : gen_flags.out_dir;
      run_gen_data(cfg, out);
      std::cout << "wrote train/val/test JSONL under " << out << "\n";
    } else if (*attack) {
      ExperimentConfig cfg = resolve_config(attack_flags);
      RunOutput out = run_attack(cfg, attack_resume, &std::cout);
    } else if (*baseline) {
      ExperimentConfig cfg = resolve_config(baseline_flags);
      cfg.train.alpha = 0.0;
      RunOutput out = run_attack(cfg, false, &std::cout);
    } else if (*evaluate) {
      EvalReport rep = run_evaluate(run_dir);
      std::cout << "asr=" << rep.asr << " cacc=" << rep.cacc << " (eligible=" << rep.eligible
                << ", clean=" << rep.clean_total << ")\n";
    } else if (*analyze) {
      run_analyze(analyze_dir);
      std::cout << "wrote concentration.csv/.json, entropy.json, flow.csv under "
                << analyze_dir << "\n";
    } else if (*defend) {
      if (onion_threshold || attentd_threshold) {
        // Thresholds override the run config for this invocation only.
        ExperimentConfig cfg =
            load_experiment_config((fs::path(defend_dir) / "config.json").string());
        if (onion_threshold) cfg.defense.onion_threshold = *onion_threshold;
        if (attentd_threshold) cfg.defense.attentd_threshold = *attentd_threshold;
        std::ofstream out(fs::path(defend_dir) / "config.json", std::ios::trunc);
        out << experiment_config_json(cfg);
      }
      DefendSummary s = run_defend(defend_dir);
      std::cout << "onion: threshold=" << s.onion_threshold << " inputs=" << s.onion_inputs
                << " trigger_removed=" << s.trigger_removed << " any_removed=" << s.any_removed
                << "\n"
                << "attentd: " << (s.attentd_backdoored ? "backdoored" : "clean") << "\n";
    } else if (*sweep) {
      ExperimentConfig cfg = resolve_config(sweep_flags);
      const std::string parent = sweep_flags.out_dir.empty() ? "runs/sweep" : sweep_flags.out_dir;
      auto dirs = run_sweep(cfg, sweep_spec, parent, &std::cout);
      std::vector<std::string> dir_strings;
      for (const auto& d : dirs) dir_strings.push_back(d.string());
      run_report(dir_strings, (fs::path(parent) / "report.csv").string());
      std::cout << "report: " << (fs::path(parent) / "report.csv").string() << "\n";
    } else if (*report) {
      auto dirs = expand_run_dirs(report_runs, report_parent);
      if (dirs.empty()) {
        std::cerr << "report: no run directories given\n";
        return 2;
      }
      run_report(dirs, report_out);
      std::cout << "wrote " << report_out << " (" << dirs.size() << " runs)\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
