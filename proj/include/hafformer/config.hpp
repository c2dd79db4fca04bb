// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "hafformer/mixers.hpp"

namespace hafformer {

// Complete architectural description; also the unit of cost analysis.
struct ModelConfig {
  std::size_t input_dim = 1024;
  std::size_t seq_len = 3200;
  std::size_t d_model = 8;
  std::size_t proj_kernel = 3;
  std::vector<std::size_t> stage_factors = {4, 2, 2};
  std::vector<std::size_t> stage_depths = {2, 2, 1};
  TokenMixerKind token_mixer = TokenMixerKind::kMsdw;
  ChannelMixerKind channel_mixer = ChannelMixerKind::kGeglu;
  std::size_t head_hidden = 16;
  std::size_t num_classes = 2;
  bool channel_residual = true;
  std::uint64_t seed = 0;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Throws ConfigError naming the offending field.
void validate(const ModelConfig& cfg);

std::size_t total_blocks(const ModelConfig& cfg);

// Frame count after each stage's merge: seq_len / prod(factors[0..s]).
std::vector<std::size_t> stage_lengths(const ModelConfig& cfg);

enum class HierarchyPreset { kH2, kH3_1, kH3_2, kH4 };

inline constexpr HierarchyPreset kAllPresets[] = {HierarchyPreset::kH2, HierarchyPreset::kH3_1,
                                                  HierarchyPreset::kH3_2, HierarchyPreset::kH4};

// Spellings: h2, h3_1, h3_2, h4.
std::string_view to_string(HierarchyPreset preset);
std::optional<HierarchyPreset> parse_preset(std::string_view text);

struct StageLayout {
  std::vector<std::size_t> factors;
  std::vector<std::size_t> depths;
};

// H2: [4,2]/[2,2]; H3_1: [4,2,2]/[2,2,1]; H3_2: [4,2,2]/[2,2,2];
// H4: [4,2,2,2]/[2,2,2,1].
StageLayout preset_stages(HierarchyPreset preset);

// Overwrites stage_factors/stage_depths; validates the result.
ModelConfig apply_preset(HierarchyPreset preset, ModelConfig cfg);

}  // namespace hafformer
