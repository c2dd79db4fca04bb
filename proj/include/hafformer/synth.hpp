// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hafformer/dataset.hpp"

namespace hafformer {

inline constexpr std::size_t kSyntheticCueChannels = 32;
inline constexpr double kSyntheticPeriod = 400.0;

// Synthetic stand-in for a labeled embedding corpus. Every record is
// standard-normal noise over `channels` channels with L_raw drawn uniformly
// from [min_frames, max_frames]. Class-1 records add
// difficulty * sin(2π t / 400 + φ) (random phase per record) on a fixed
// set of 32 cue channels. Records alternate labels 0, 1, 0, 1, ...
struct SynthOptions {
  std::size_t n_per_class = 50;
  std::uint64_t seed = 0;
  double difficulty = 1.0;  // (0, 1]
  std::size_t channels = kEmbeddingDim;
  std::size_t min_frames = 800;
  std::size_t max_frames = 3200;
  // Generate at most this many leading frames (0 = all). Values are a pure
  // function of (seed, record, frame, channel), so capping equals
  // generating everything and truncating.
  std::size_t frame_cap = 0;
  Split split = Split::kTrain;
  std::string id_prefix = "synth";
};

Dataset synthesize_dataset(const SynthOptions& options);

// The cue channels; identical for every seed so that separately seeded
// train and test sets describe the same task.
std::vector<std::size_t> synthetic_cue_channels(std::size_t channels);

}  // namespace hafformer
