// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <string>

#include "hafformer/model.hpp"

namespace hafformer {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (all integers little-endian):
//   "HAFC" | version u32
//   config: input_dim u32, seq_len u32, d_model u32, proj_kernel u32,
//           head_hidden u32, num_classes u32, token_mixer u8,
//           channel_mixer u8, channel_residual u8, seed u64,
//           stages u32, factors u32 x stages, depths u32 x stages
//   count u32, then per parameter in name order:
//           name_len u32, UTF-8 name, rank u32, extents u32 x rank,
//           values f64 x element count
std::string encode_checkpoint(const Model& model);
Model decode_checkpoint(const std::string& bytes, const std::string& source = "<memory>");

void save_checkpoint(const std::string& path, const Model& model);
Model load_checkpoint(const std::string& path);

}  // namespace hafformer
