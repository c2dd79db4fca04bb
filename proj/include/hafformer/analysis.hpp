// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hafformer/config.hpp"

namespace hafformer {

// Closed-form parameter and multiply-accumulate accounting. MACs count
// matmul, convolution and attention products only; biases, layer norm,
// activations, softmax and pooling are free.

std::uint64_t token_mixer_params(TokenMixerKind kind, std::uint64_t d);
std::uint64_t channel_mixer_params(ChannelMixerKind kind, std::uint64_t d);
// MACs of one mixer applied to `frames` frames.
std::uint64_t token_mixer_macs(TokenMixerKind kind, std::uint64_t d, std::uint64_t frames);
std::uint64_t channel_mixer_macs(ChannelMixerKind kind, std::uint64_t d, std::uint64_t frames);

struct CostEntry {
  std::string component;
  std::uint64_t params = 0;
  std::uint64_t macs = 0;
};

struct CostReport {
  std::vector<CostEntry> entries;
  std::uint64_t params_excl_projection = 0;
  std::uint64_t params_incl_projection = 0;
  std::uint64_t macs_excl_projection = 0;
  std::uint64_t macs_incl_projection = 0;
  // Caveats about the closed form, e.g. the MSDW parameter residue.
  std::vector<std::string> notes;
};

// Both fill the full report (params and MACs); MACs are evaluated at the
// configured seq_len.
CostReport count_params(const ModelConfig& cfg);
CostReport count_macs(const ModelConfig& cfg);

struct CostRow {
  TokenMixerKind token_mixer;
  ChannelMixerKind channel_mixer;
  std::uint64_t params = 0;
  std::uint64_t macs = 0;
  std::uint64_t params_incl_projection = 0;
  std::uint64_t macs_incl_projection = 0;
};

using MixerPair = std::pair<TokenMixerKind, ChannelMixerKind>;

// The 6 x 4 grid in table order (token mixer major).
std::vector<MixerPair> all_mixer_pairs();

// One row per pair, every other field taken from `base`.
std::vector<CostRow> cost_table(const ModelConfig& base, std::span<const MixerPair> pairs);

// Fixed two-decimal renderings, rounding half away from zero:
// 5090 -> "5.09" (K), 28518560 -> "28.52" (M).
std::string format_kilo(std::uint64_t count);
std::string format_mega(std::uint64_t count);

std::string format_cost_table(std::span<const CostRow> rows);
std::string format_cost_report(const ModelConfig& cfg, const CostReport& report);

// [{token_mixer, channel_mixer, params, macs, params_incl_projection,
//   macs_incl_projection}, ...] with raw integer counts, as UTF-8 JSON text.
std::string cost_table_json(std::span<const CostRow> rows);

}  // namespace hafformer
