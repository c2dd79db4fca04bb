// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hafformer/config.hpp"

namespace hafformer {

inline constexpr double kGradCheckTolerance = 1e-4;

struct GradCheckCase {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  bool passed = false;
};

// One AFFormer block with randomized parameters (including biases and norm
// affine terms) on a random frames x d input; the objective is a fixed
// random weighting of the output. Checks every parameter and the input.
GradCheckCase check_block(TokenMixerKind tk, ChannelMixerKind ck, std::size_t frames,
                          std::size_t d_model, std::uint64_t seed);

// All 24 token/channel combinations, table order.
std::vector<GradCheckCase> check_all_blocks(std::size_t frames, std::size_t d_model,
                                            std::uint64_t seed);

// Cross-entropy of the full model over every parameter for one random input.
GradCheckCase check_model(const ModelConfig& cfg, std::uint64_t seed);

// cfg shrunk to seq_len 64, input_dim 16.
ModelConfig shrink_for_gradcheck(ModelConfig cfg);

}  // namespace hafformer
