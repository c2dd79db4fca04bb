// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

// hafformer: analyze | gradcheck | synth | train | eval
//
// Exit codes: 0 success, 1 numeric/assertion failure, 2 usage or
// configuration failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hafformer/analysis.hpp"
#include "hafformer/checkpoint.hpp"
#include "hafformer/error.hpp"
#include "hafformer/gradcheck_suite.hpp"
#include "hafformer/ops.hpp"
#include "hafformer/run_config.hpp"
#include "hafformer/synth.hpp"
#include "hafformer/training.hpp"

namespace fs = std::filesystem;
using namespace hafformer;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumeric = 1;
constexpr int kExitUsage = 2;

struct Options {
  std::string config_path;
  std::string data_dir;
  std::string out_dir;
  std::string json_path;
  std::string checkpoint_path;
  std::optional<std::uint64_t> seed;
  std::string scale = "small";
  bool all_combos = false;
  bool corrupt_backward = false;
};

RunConfig resolve_config(const Options& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
  if (o.seed) override_seed(cfg, *o.seed);
  return cfg;
}

std::size_t thread_budget() {
  const char* env = std::getenv("HAFF_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const unsigned long v = std::strtoul(env, &end, 10);
  if (*end != '\0' || v == 0) throw ConfigError("HAFF_THREADS must be a positive integer");
  return static_cast<std::size_t>(v);
}

void write_text(const std::string& path, const std::string& text) {
  if (const fs::path parent = fs::path(path).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << text;
}

int cmd_analyze(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  std::vector<MixerPair> pairs;
  if (o.all_combos) {
    pairs = all_mixer_pairs();
  } else {
    pairs.emplace_back(cfg.model.token_mixer, cfg.model.channel_mixer);
  }
  const std::vector<CostRow> rows = cost_table(cfg.model, pairs);
  if (o.all_combos) {
    std::cout << format_cost_table(rows);
    ModelConfig msdw = cfg.model;
    msdw.token_mixer = TokenMixerKind::kMsdw;
    for (const std::string& note : count_params(msdw).notes) std::cout << "warning: " << note << "\n";
  } else {
    std::cout << format_cost_report(cfg.model, count_macs(cfg.model));
  }
  std::string json_path = o.json_path;
  if (json_path.empty() && !o.out_dir.empty()) json_path = (fs::path(o.out_dir) / "cost_table.json").string();
  if (!json_path.empty()) write_text(json_path, cost_table_json(rows));
  return kExitOk;
}

int cmd_gradcheck(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  if (o.scale != "small" && o.scale != "paper") throw ConfigError("--scale must be small or paper");
  ops::testing::corrupt_gelu_backward(o.corrupt_backward);

  std::vector<GradCheckCase> cases = check_all_blocks(16, cfg.model.d_model, cfg.model.seed + 1);
  const ModelConfig model_cfg = o.scale == "small" ? shrink_for_gradcheck(cfg.model) : cfg.model;
  cases.push_back(check_model(model_cfg, cfg.model.seed + 101));

  bool ok = true;
  for (const GradCheckCase& c : cases) {
    std::printf("%s  %-44s max_rel_err=%.3e  coords=%zu\n", c.passed ? "PASS" : "FAIL",
                c.name.c_str(), c.max_relative_error, c.coordinates);
    ok = ok && c.passed;
  }
  if (!ok) {
    std::fprintf(stderr, "gradcheck: failing cases:");
    for (const GradCheckCase& c : cases)
      if (!c.passed) std::fprintf(stderr, " [%s]", c.name.c_str());
    std::fprintf(stderr, "\n");
  }
  return ok ? kExitOk : kExitNumeric;
}

int cmd_synth(const Options& o) {
  if (o.out_dir.empty()) throw ConfigError("synth: --out DIR is required");
  const RunConfig cfg = resolve_config(o);
  for (Split split : {Split::kTrain, Split::kTest}) {
    const SynthOptions so = synth_options(cfg, split);
    const fs::path dir = fs::path(o.out_dir) / (split == Split::kTrain ? "train" : "test");
    save_dataset_dir(dir.string(), synthesize_dataset(so));
    std::cout << "wrote " << 2 * so.n_per_class << " records to " << dir.string() << "\n";
  }
  return kExitOk;
}

Dataset load_split(const RunConfig& cfg, const Options& o, Split split, std::size_t input_dim) {
  if (cfg.data_source == DataSource::kSynthetic) {
    return synthesize_dataset(synth_options(cfg, split));
  }
  if (o.data_dir.empty()) throw ConfigError("--data DIR is required when data_source = files");
  return load_dataset_dir(o.data_dir, split, input_dim);
}

int cmd_train(const Options& o) {
  if (o.out_dir.empty()) throw ConfigError("train: --out DIR is required");
  RunConfig cfg = resolve_config(o);
  cfg.train.threads = thread_budget();
  const Dataset data = load_split(cfg, o, Split::kTrain, cfg.model.input_dim);

  Model model(cfg.model);
  model.set_precision(cfg.precision);
  for (const std::string& w : model.warnings()) std::cerr << "warning: " << w << "\n";

  fs::create_directories(o.out_dir);
  const std::string log_path = (fs::path(o.out_dir) / "train_log.jsonl").string();
  std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
  if (!log) throw IoError(log_path + ": cannot open for writing");

  train(model, data, cfg.train, [&](const EpochLog& e) {
    const std::string line = to_json_line(e);
    log << line << "\n";
    log.flush();
    std::cout << line << "\n";
  });
  const std::string ckpt = (fs::path(o.out_dir) / "model.hafc").string();
  save_checkpoint(ckpt, model);
  std::cout << "checkpoint: " << ckpt << "\n";
  return kExitOk;
}

int cmd_eval(const Options& o) {
  std::string ckpt = o.checkpoint_path;
  if (ckpt.empty()) {
    if (o.out_dir.empty()) throw ConfigError("eval: --checkpoint PATH or --out DIR is required");
    ckpt = (fs::path(o.out_dir) / "model.hafc").string();
  }
  RunConfig cfg = resolve_config(o);
  Model model = load_checkpoint(ckpt);
  model.set_precision(cfg.precision);
  // Synthetic test data follows the trained model's geometry.
  cfg.model.seq_len = model.config().seq_len;
  cfg.model.input_dim = model.config().input_dim;
  const Dataset data = load_split(cfg, o, Split::kTest, model.config().input_dim);
  const std::string json = to_json(evaluate(model, data, thread_budget()));
  std::cout << json << "\n";
  if (!o.json_path.empty()) write_text(o.json_path, json + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical attention-free transformer: cost analysis, gradient checks, training"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "key = value configuration file");
    sub->add_option("--seed", o.seed, "override every seed in the configuration");
  };

  CLI::App* analyze = app.add_subcommand("analyze", "parameter / MAC cost report");
  add_common(analyze);
  analyze->add_flag("--all-combos", o.all_combos, "print all 24 token/channel mixer pairs");
  analyze->add_option("--json", o.json_path, "write the machine-readable table here");
  analyze->add_option("--out", o.out_dir, "write cost_table.json into this directory");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  add_common(gradcheck);
  gradcheck->add_option("--scale", o.scale, "small (seq_len 64, input_dim 16) or paper")
      ->check(CLI::IsMember({"small", "paper"}));
  gradcheck->add_flag("--corrupt-backward", o.corrupt_backward,
                      "negative control: perturb the GELU backward rule");

  CLI::App* synth = app.add_subcommand("synth", "write a synthetic train/test dataset");
  add_common(synth);
  synth->add_option("--out", o.out_dir, "output directory (train/ and test/)")->required();

  CLI::App* train_cmd = app.add_subcommand("train", "train and write a checkpoint + log");
  add_common(train_cmd);
  train_cmd->add_option("--data", o.data_dir, "dataset directory with manifest.csv");
  train_cmd->add_option("--out", o.out_dir, "output directory")->required();

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval_cmd);
  eval_cmd->add_option("--data", o.data_dir, "dataset directory with manifest.csv");
  eval_cmd->add_option("--out", o.out_dir, "training output directory holding model.hafc");
  eval_cmd->add_option("--checkpoint", o.checkpoint_path, "checkpoint file");
  eval_cmd->add_option("--json", o.json_path, "also write the metrics JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*analyze) return cmd_analyze(o);
    if (*gradcheck) return cmd_gradcheck(o);
    if (*synth) return cmd_synth(o);
    if (*train_cmd) return cmd_train(o);
    if (*eval_cmd) return cmd_eval(o);
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
