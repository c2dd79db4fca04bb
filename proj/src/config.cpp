// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#include "hafformer/config.hpp"

#include <string>

#include "hafformer/error.hpp"

namespace hafformer {

namespace {

[[noreturn]] void reject(const char* field, const std::string& why) {
  throw ConfigError(std::string(field) + ": " + why);
}

}  // namespace

void validate(const ModelConfig& cfg) {
  if (cfg.input_dim == 0) reject("input_dim", "must be >= 1");
  if (cfg.seq_len == 0) reject("seq_len", "must be >= 1");
  if (cfg.d_model == 0) reject("d_model", "must be >= 1");
  if (cfg.proj_kernel == 0 || cfg.proj_kernel % 2 == 0) reject("proj_kernel", "must be odd");
  if (cfg.head_hidden == 0) reject("head_hidden", "must be >= 1");
  if (cfg.num_classes < 2) reject("num_classes", "must be >= 2");
  if (cfg.stage_factors.empty()) reject("stage_factors", "at least one stage is required");
  if (cfg.stage_factors.size() != cfg.stage_depths.size()) {
    reject("stage_depths", "has " + std::to_string(cfg.stage_depths.size()) +
                               " entries but stage_factors has " +
                               std::to_string(cfg.stage_factors.size()));
  }
  std::size_t product = 1;
  for (std::size_t i = 0; i < cfg.stage_factors.size(); ++i) {
    if (cfg.stage_factors[i] == 0) reject("stage_factors", "every factor must be >= 1");
    if (cfg.stage_depths[i] == 0) reject("stage_depths", "every depth must be >= 1");
    product *= cfg.stage_factors[i];
    if (cfg.seq_len % product != 0) {
      reject("seq_len", std::to_string(cfg.seq_len) + " is not divisible by the running factor " +
                            "product " + std::to_string(product) + " at stage " +
                            std::to_string(i));
    }
  }
}

std::size_t total_blocks(const ModelConfig& cfg) {
  std::size_t n = 0;
  for (std::size_t d : cfg.stage_depths) n += d;
  return n;
}

std::vector<std::size_t> stage_lengths(const ModelConfig& cfg) {
  std::vector<std::size_t> out;
  std::size_t len = cfg.seq_len;
  for (std::size_t f : cfg.stage_factors) {
    len /= f;
    out.push_back(len);
  }
  return out;
}

std::string_view to_string(HierarchyPreset preset) {
  switch (preset) {
    case HierarchyPreset::kH2: return "h2";
    case HierarchyPreset::kH3_1: return "h3_1";
    case HierarchyPreset::kH3_2: return "h3_2";
    case HierarchyPreset::kH4: return "h4";
  }
  return "?";
}

std::optional<HierarchyPreset> parse_preset(std::string_view text) {
  for (HierarchyPreset p : kAllPresets)
    if (to_string(p) == text) return p;
  return std::nullopt;
}

StageLayout preset_stages(HierarchyPreset preset) {
  switch (preset) {
    case HierarchyPreset::kH2: return {{4, 2}, {2, 2}};
    case HierarchyPreset::kH3_1: return {{4, 2, 2}, {2, 2, 1}};
    case HierarchyPreset::kH3_2: return {{4, 2, 2}, {2, 2, 2}};
    case HierarchyPreset::kH4: return {{4, 2, 2, 2}, {2, 2, 2, 1}};
  }
  return {};
}

ModelConfig apply_preset(HierarchyPreset preset, ModelConfig cfg) {
  StageLayout stages = preset_stages(preset);
  cfg.stage_factors = std::move(stages.factors);
  cfg.stage_depths = std::move(stages.depths);
  validate(cfg);
  return cfg;
}

}  // namespace hafformer
