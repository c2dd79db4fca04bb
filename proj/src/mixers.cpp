// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#include "hafformer/mixers.hpp"

#include <cmath>

#include "hafformer/error.hpp"

namespace hafformer {

namespace {

TensorSpec linear_weight(std::string name, std::size_t in, std::size_t out) {
  return {std::move(name), {in, out}, in, InitKind::kFanInUniform, true};
}

TensorSpec bias(std::string name, std::size_t n) {
  return {std::move(name), {n}, 1, InitKind::kZeros, false};
}

TensorSpec depthwise_weight(std::string name, std::size_t channels, std::size_t kernel) {
  return {std::move(name), {channels, 1, kernel}, kernel, InitKind::kFanInUniform, true};
}

void append_norm(std::vector<TensorSpec>& out, const std::string& prefix, std::size_t d) {
  out.push_back({prefix + "norm.gamma", {d}, 1, InitKind::kOnes, false});
  out.push_back({prefix + "norm.beta", {d}, 1, InitKind::kZeros, false});
}

Var lookup(const VarMap& params, std::string_view name) {
  auto it = params.find(name);
  if (it == params.end()) {
    throw ArgumentError("mixer parameter '" + std::string(name) + "' is missing");
  }
  return it->second;
}

Var normalize(const VarMap& params, Var x, double eps) {
  const Var gamma = lookup(params, "norm.gamma");
  if (gamma.cols() != x.cols()) {
    throw ShapeError("mixer: input " + x.value().shape_string() + " does not match width " +
                     std::to_string(gamma.cols()));
  }
  return ops::layer_norm(x, gamma, lookup(params, "norm.beta"), eps);
}

Var depthwise(const VarMap& params, std::string_view name, Var z, std::size_t kernel) {
  ops::Conv1dSpec spec;
  spec.kernel = kernel;
  spec.stride = 1;
  spec.padding = (kernel - 1) / 2;
  spec.groups = z.cols();
  return ops::conv1d(z, lookup(params, name), std::nullopt, spec);
}

Var fc(const VarMap& params, const std::string& name, Var z, bool with_bias = true) {
  std::optional<Var> b;
  if (with_bias) b = lookup(params, name + ".bias");
  return ops::linear(z, lookup(params, name + ".weight"), b);
}

Var self_attention(const VarMap& params, Var z) {
  const Var q = fc(params, "wq", z);
  const Var k = fc(params, "wk", z);
  const Var v = fc(params, "wv", z);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(z.cols()));
  const Var scores = ops::scale(ops::matmul(q, ops::transpose(k)), inv_sqrt_d);
  const Var attended = ops::matmul(ops::softmax_rows(scores), v);
  return fc(params, "wo", attended);
}

}  // namespace

std::string_view to_string(TokenMixerKind kind) {
  switch (kind) {
    case TokenMixerKind::kSelfAttention: return "self_attention";
    case TokenMixerKind::kPool: return "pool";
    case TokenMixerKind::kIdentity: return "identity";
    case TokenMixerKind::kIsc: return "isc";
    case TokenMixerKind::kDw: return "dw";
    case TokenMixerKind::kMsdw: return "msdw";
  }
  return "?";
}

std::string_view to_string(ChannelMixerKind kind) {
  switch (kind) {
    case ChannelMixerKind::kFfn: return "ffn";
    case ChannelMixerKind::kPool: return "pool";
    case ChannelMixerKind::kIdentity: return "identity";
    case ChannelMixerKind::kGeglu: return "geglu";
  }
  return "?";
}

std::optional<TokenMixerKind> parse_token_mixer(std::string_view text) {
  for (TokenMixerKind k : kAllTokenMixers)
    if (to_string(k) == text) return k;
  return std::nullopt;
}

std::optional<ChannelMixerKind> parse_channel_mixer(std::string_view text) {
  for (ChannelMixerKind k : kAllChannelMixers)
    if (to_string(k) == text) return k;
  return std::nullopt;
}

std::vector<TensorSpec> token_mixer_layout(TokenMixerKind kind, std::size_t d) {
  std::vector<TensorSpec> out;
  switch (kind) {
    case TokenMixerKind::kSelfAttention:
      for (const char* proj : {"wq", "wk", "wv", "wo"}) {
        out.push_back(linear_weight(std::string(proj) + ".weight", d, d));
        out.push_back(bias(std::string(proj) + ".bias", d));
      }
      break;
    case TokenMixerKind::kIsc:
      out.push_back(linear_weight("expand.weight", d, kIscRatio * d));
      out.push_back(depthwise_weight("depthwise.weight", kIscRatio * d, kDepthwiseKernel));
      out.push_back(linear_weight("project.weight", kIscRatio * d, d));
      break;
    case TokenMixerKind::kDw:
      out.push_back(depthwise_weight("depthwise.weight", d, kDepthwiseKernel));
      break;
    case TokenMixerKind::kMsdw:
      out.push_back(depthwise_weight("depthwise7.weight", d, kDepthwiseKernel));
      out.push_back(depthwise_weight("depthwise1.weight", d, 1));
      break;
    case TokenMixerKind::kPool:
    case TokenMixerKind::kIdentity:
      break;
  }
  return out;
}

std::vector<TensorSpec> channel_mixer_layout(ChannelMixerKind kind, std::size_t d) {
  std::vector<TensorSpec> out;
  switch (kind) {
    case ChannelMixerKind::kFfn:
      out.push_back(linear_weight("fc_in.weight", d, kFfnRatio * d));
      out.push_back(bias("fc_in.bias", kFfnRatio * d));
      out.push_back(linear_weight("fc_out.weight", kFfnRatio * d, d));
      out.push_back(bias("fc_out.bias", d));
      break;
    case ChannelMixerKind::kGeglu:
      out.push_back(linear_weight("gate.weight", d, kGegluRatio * d));
      out.push_back(bias("gate.bias", kGegluRatio * d));
      out.push_back(linear_weight("value.weight", d, kGegluRatio * d));
      out.push_back(bias("value.bias", kGegluRatio * d));
      out.push_back(linear_weight("out.weight", kGegluRatio * d, d));
      out.push_back(bias("out.bias", d));
      break;
    case ChannelMixerKind::kPool:
    case ChannelMixerKind::kIdentity:
      break;
  }
  return out;
}

std::vector<TensorSpec> block_layout(TokenMixerKind tk, ChannelMixerKind ck, std::size_t d) {
  std::vector<TensorSpec> out;
  append_norm(out, "token.", d);
  for (TensorSpec spec : token_mixer_layout(tk, d)) {
    spec.name = "token." + spec.name;
    out.push_back(std::move(spec));
  }
  append_norm(out, "channel.", d);
  for (TensorSpec spec : channel_mixer_layout(ck, d)) {
    spec.name = "channel." + spec.name;
    out.push_back(std::move(spec));
  }
  return out;
}

VarMap sub_map(const VarMap& params, std::string_view prefix) {
  VarMap out;
  for (auto it = params.lower_bound(prefix); it != params.end(); ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    out.emplace(it->first.substr(prefix.size()), it->second);
  }
  return out;
}

Var token_mix(TokenMixerKind kind, const VarMap& params, Var x, double ln_eps) {
  const Var z = normalize(params, x, ln_eps);
  Var mixed = z;
  switch (kind) {
    case TokenMixerKind::kSelfAttention:
      mixed = self_attention(params, z);
      break;
    case TokenMixerKind::kPool:
      mixed = ops::avg_pool_time(z, kPoolKernel);
      break;
    case TokenMixerKind::kIdentity:
      break;
    case TokenMixerKind::kIsc: {
      const Var expanded = ops::gelu(fc(params, "expand", z, false));
      const Var spatial = ops::gelu(depthwise(params, "depthwise.weight", expanded, kDepthwiseKernel));
      mixed = fc(params, "project", spatial, false);
      break;
    }
    case TokenMixerKind::kDw:
      mixed = depthwise(params, "depthwise.weight", z, kDepthwiseKernel);
      break;
    case TokenMixerKind::kMsdw:
      mixed = ops::gelu(ops::add(depthwise(params, "depthwise7.weight", z, kDepthwiseKernel),
                                 depthwise(params, "depthwise1.weight", z, 1)));
      break;
  }
  return ops::add(mixed, x);
}

Var channel_mix(ChannelMixerKind kind, const VarMap& params, Var x, bool residual,
                double ln_eps) {
  const Var z = normalize(params, x, ln_eps);
  Var mixed = z;
  switch (kind) {
    case ChannelMixerKind::kFfn:
      mixed = fc(params, "fc_out", ops::gelu(fc(params, "fc_in", z)));
      break;
    case ChannelMixerKind::kGeglu: {
      const Var gate = ops::gelu(fc(params, "gate", z));
      mixed = fc(params, "out", ops::mul(gate, fc(params, "value", z)));
      break;
    }
    case ChannelMixerKind::kPool:
      mixed = ops::avg_pool_channels(z, kPoolKernel);
      break;
    case ChannelMixerKind::kIdentity:
      break;
  }
  return residual ? ops::add(mixed, x) : mixed;
}

Var afformer_block(TokenMixerKind tk, ChannelMixerKind ck, const VarMap& params, Var x,
                   const BlockOptions& options) {
  const Var mid = token_mix(tk, sub_map(params, "token."), x, options.ln_eps);
  return channel_mix(ck, sub_map(params, "channel."), mid, options.channel_residual,
                     options.ln_eps);
}

std::optional<std::string> short_sequence_warning(TokenMixerKind kind, std::size_t frames) {
  const bool uses_k7 = kind == TokenMixerKind::kIsc || kind == TokenMixerKind::kDw ||
                       kind == TokenMixerKind::kMsdw;
  if (!uses_k7 || frames >= kDepthwiseKernel) return std::nullopt;
  return std::string(to_string(kind)) + " token mixer on " + std::to_string(frames) +
         " frames: kernel " + std::to_string(kDepthwiseKernel) + " window is mostly padding";
}

}  // namespace hafformer
