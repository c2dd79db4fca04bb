// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hafformer/graph.hpp"
#include "hafformer/ops.hpp"
#include "hafformer/tensor_spec.hpp"

namespace hafformer {

enum class TokenMixerKind { kSelfAttention, kPool, kIdentity, kIsc, kDw, kMsdw };
enum class ChannelMixerKind { kFfn, kPool, kIdentity, kGeglu };

inline constexpr std::array<TokenMixerKind, 6> kAllTokenMixers = {
    TokenMixerKind::kSelfAttention, TokenMixerKind::kPool, TokenMixerKind::kIdentity,
    TokenMixerKind::kIsc,           TokenMixerKind::kDw,   TokenMixerKind::kMsdw};
inline constexpr std::array<ChannelMixerKind, 4> kAllChannelMixers = {
    ChannelMixerKind::kFfn, ChannelMixerKind::kPool, ChannelMixerKind::kIdentity,
    ChannelMixerKind::kGeglu};

// Mixer geometry. Widths are multiples of d_model.
inline constexpr std::size_t kDepthwiseKernel = 7;
inline constexpr std::size_t kPoolKernel = 3;
inline constexpr std::size_t kFfnRatio = 4;
inline constexpr std::size_t kGegluRatio = 2;
inline constexpr std::size_t kIscRatio = 2;

// Config spellings: self_attention, pool, identity, isc, dw, msdw /
// ffn, pool, identity, geglu.
std::string_view to_string(TokenMixerKind kind);
std::string_view to_string(ChannelMixerKind kind);
std::optional<TokenMixerKind> parse_token_mixer(std::string_view text);
std::optional<ChannelMixerKind> parse_channel_mixer(std::string_view text);

// Tensors owned by one mixer, named relative to the mixer ("wq.weight", ...).
// Pool and Identity own nothing.
std::vector<TensorSpec> token_mixer_layout(TokenMixerKind kind, std::size_t d_model);
std::vector<TensorSpec> channel_mixer_layout(ChannelMixerKind kind, std::size_t d_model);

// Full block: "token.norm.{gamma,beta}", "token.<mixer tensors>",
// "channel.norm.{gamma,beta}", "channel.<mixer tensors>".
std::vector<TensorSpec> block_layout(TokenMixerKind tk, ChannelMixerKind ck, std::size_t d_model);

// Parameter bundle bound into a graph, keyed by name.
using VarMap = std::map<std::string, Var, std::less<>>;

// Entries of `params` under `prefix` with the prefix stripped.
VarMap sub_map(const VarMap& params, std::string_view prefix);

struct BlockOptions {
  bool channel_residual = true;
  double ln_eps = ops::kLayerNormEps;
};

// Y = Mix(LN(X)) + X. `params` holds "norm.gamma", "norm.beta" and the
// mixer's own tensors.
Var token_mix(TokenMixerKind kind, const VarMap& params, Var x,
              double ln_eps = ops::kLayerNormEps);

// Y = Mix(LN(X)) + X; the residual is dropped when `residual` is false.
Var channel_mix(ChannelMixerKind kind, const VarMap& params, Var x, bool residual = true,
                double ln_eps = ops::kLayerNormEps);

// channel_mix(ck, token_mix(tk, X)); shape preserving.
Var afformer_block(TokenMixerKind tk, ChannelMixerKind ck, const VarMap& params, Var x,
                   const BlockOptions& options = {});

// Set when a kernel-7 token mixer runs on fewer than 7 frames (legal, but
// the window is mostly padding).
std::optional<std::string> short_sequence_warning(TokenMixerKind kind, std::size_t frames);

}  // namespace hafformer
