// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#include "hafformer/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "hafformer/error.hpp"
#include "hafformer/random.hpp"

namespace hafformer {

namespace {

// Streams of the generator; the cue layout uses a seed-independent key.
constexpr std::uint64_t kCueKey = 0x48414646;  // "HAFF"
constexpr std::uint64_t kShapeStream = 1;
constexpr std::uint64_t kNoiseStreamBase = 1ULL << 32;

}  // namespace

std::vector<std::size_t> synthetic_cue_channels(std::size_t channels) {
  std::vector<std::size_t> all(channels);
  std::iota(all.begin(), all.end(), 0);
  CounterRng rng(kCueKey, 0);
  const std::size_t take = std::min(kSyntheticCueChannels, channels);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_below(channels - i));
    std::swap(all[i], all[j]);
  }
  all.resize(take);
  std::sort(all.begin(), all.end());
  return all;
}

Dataset synthesize_dataset(const SynthOptions& options) {
  if (options.n_per_class == 0) throw ArgumentError("synthesize_dataset: n_per_class must be >= 1");
  if (!(options.difficulty > 0.0 && options.difficulty <= 1.0)) {
    throw ArgumentError("synthesize_dataset: difficulty must lie in (0, 1]");
  }
  if (options.channels == 0 || options.min_frames == 0 || options.min_frames > options.max_frames) {
    throw ArgumentError("synthesize_dataset: invalid channel or frame range");
  }
  const std::vector<std::size_t> cue = synthetic_cue_channels(options.channels);
  const std::size_t total = 2 * options.n_per_class;

  Dataset dataset;
  dataset.split = options.split;
  dataset.records.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    const CounterRng shape(options.seed, kShapeStream + 2 * i);
    const std::size_t span = options.max_frames - options.min_frames + 1;
    const std::size_t raw_frames = options.min_frames + static_cast<std::size_t>(shape.bits_at(0) % span);
    const double phase = 2.0 * std::numbers::pi * shape.uniform_at(1);
    const std::size_t frames = options.frame_cap ? std::min(raw_frames, options.frame_cap) : raw_frames;

    EmbeddingRecord record;
    char id[64];
    std::snprintf(id, sizeof id, "%s-%05zu", options.id_prefix.c_str(), i);
    record.id = id;
    record.label = static_cast<int>(i % 2);
    record.features = FrameMatrix(frames, options.channels);

    const CounterRng noise(options.seed, kNoiseStreamBase + i);
    auto values = record.features.values();
    for (std::size_t n = 0; n < values.size(); ++n) values[n] = noise.normal_at(n);
    if (*record.label == 1) {
      for (std::size_t t = 0; t < frames; ++t) {
        const double drift = options.difficulty *
            std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / kSyntheticPeriod + phase);
        for (std::size_t c : cue) record.features(t, c) += drift;
      }
    }
    dataset.records.push_back(std::move(record));
  }
  return dataset;
}

}  // namespace hafformer
