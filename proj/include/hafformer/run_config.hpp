// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "hafformer/config.hpp"
#include "hafformer/graph.hpp"
#include "hafformer/synth.hpp"
#include "hafformer/training.hpp"

namespace hafformer {

enum class DataSource { kFiles, kSynthetic };

struct SynthSettings {
  std::size_t train_per_class = 50;
  std::size_t test_per_class = 20;
  double difficulty = 1.0;
  std::uint64_t seed = 0;
  std::size_t min_frames = 800;
  std::size_t max_frames = 3200;
};

// Everything a CLI run needs besides file paths.
struct RunConfig {
  ModelConfig model;
  TrainOptions train;
  Precision precision = Precision::kFloat64;
  DataSource data_source = DataSource::kFiles;
  SynthSettings synth;
};

// Flat "key = value" text; '#' starts a comment. Unknown keys, malformed
// values and invalid model configurations raise ConfigError with a
// "<source>:<line>: " prefix. Keys:
//   token_mixer, channel_mixer, preset, stage_factors, stage_depths,
//   input_dim, seq_len, d_model, proj_kernel, head_hidden, num_classes,
//   channel_residual, seed, epochs, batch_size, lr, weight_decay, beta1,
//   beta2, adam_eps, precision, data_source, synth_train_per_class,
//   synth_test_per_class, synth_difficulty, synth_seed, synth_min_frames,
//   synth_max_frames
// `seed` seeds both initialization and the shuffle stream. Explicit
// stage_factors/stage_depths override a preset regardless of line order.
RunConfig parse_run_config(std::string_view text, const std::string& source = "<config>");
RunConfig load_run_config(const std::string& path);

// Applies --seed: model init, shuffle and synthetic data seeds.
void override_seed(RunConfig& cfg, std::uint64_t seed);

// Synthetic train/test splits described by cfg, capped at the model's
// seq_len frames. The test split uses a distinct stream.
SynthOptions synth_options(const RunConfig& cfg, Split split);

}  // namespace hafformer
