// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#include "hafformer/checkpoint.hpp"

#include <algorithm>
#include <iterator>

#include "binary_io.hpp"

namespace hafformer {

namespace {

constexpr std::string_view kMagic = "HAFC";

template <typename Kind, std::size_t N>
std::uint8_t kind_index(const std::array<Kind, N>& all, Kind k) {
  return static_cast<std::uint8_t>(std::distance(all.begin(), std::find(all.begin(), all.end(), k)));
}

template <typename Kind, std::size_t N>
Kind kind_at(const std::array<Kind, N>& all, std::uint8_t index, const std::string& source,
             const char* what) {
  if (index >= N) throw FormatError(source + ": invalid " + std::string(what) + " code");
  return all[index];
}

std::uint32_t narrow(std::size_t v, const char* what) {
  if (v > UINT32_MAX) throw ArgumentError(std::string("checkpoint: ") + what + " too large");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::string encode_checkpoint(const Model& model) {
  const ModelConfig& cfg = model.config();
  detail::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kCheckpointVersion);
  w.u32(narrow(cfg.input_dim, "input_dim"));
  w.u32(narrow(cfg.seq_len, "seq_len"));
  w.u32(narrow(cfg.d_model, "d_model"));
  w.u32(narrow(cfg.proj_kernel, "proj_kernel"));
  w.u32(narrow(cfg.head_hidden, "head_hidden"));
  w.u32(narrow(cfg.num_classes, "num_classes"));
  w.u8(kind_index(kAllTokenMixers, cfg.token_mixer));
  w.u8(kind_index(kAllChannelMixers, cfg.channel_mixer));
  w.u8(cfg.channel_residual ? 1 : 0);
  w.u64(cfg.seed);
  w.u32(narrow(cfg.stage_factors.size(), "stage count"));
  for (std::size_t f : cfg.stage_factors) w.u32(narrow(f, "stage factor"));
  for (std::size_t d : cfg.stage_depths) w.u32(narrow(d, "stage depth"));

  const ParameterStore& store = model.parameters();
  w.u32(narrow(store.size(), "parameter count"));
  for (const auto& [name, p] : store) {
    w.u32(narrow(name.size(), "name length"));
    w.bytes(name);
    w.u32(narrow(p.spec.shape.size(), "rank"));
    for (std::size_t e : p.spec.shape) w.u32(narrow(e, "extent"));
    for (double v : p.value.values()) w.f64(v);
  }
  return w.take();
}

Model decode_checkpoint(const std::string& bytes, const std::string& source) {
  detail::ByteReader r(bytes, source);
  if (bytes.size() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
    throw FormatError(source + ": bad magic, not a checkpoint");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError(source + ": unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig cfg;
  cfg.input_dim = r.u32();
  cfg.seq_len = r.u32();
  cfg.d_model = r.u32();
  cfg.proj_kernel = r.u32();
  cfg.head_hidden = r.u32();
  cfg.num_classes = r.u32();
  cfg.token_mixer = kind_at(kAllTokenMixers, r.u8(), source, "token mixer");
  cfg.channel_mixer = kind_at(kAllChannelMixers, r.u8(), source, "channel mixer");
  cfg.channel_residual = r.u8() != 0;
  cfg.seed = r.u64();
  const std::uint32_t stages = r.u32();
  if (stages > r.remaining()) throw CorruptionError(source + ": implausible stage count");
  cfg.stage_factors.clear();
  cfg.stage_depths.clear();
  for (std::uint32_t i = 0; i < stages; ++i) cfg.stage_factors.push_back(r.u32());
  for (std::uint32_t i = 0; i < stages; ++i) cfg.stage_depths.push_back(r.u32());

  const std::vector<TensorSpec> layout = model_layout(cfg);
  ParameterStore store;
  const std::uint32_t count = r.u32();
  if (count != layout.size()) {
    throw FormatError(source + ": " + std::to_string(count) + " tensors stored, configuration needs " +
                      std::to_string(layout.size()));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    std::string name(r.bytes(name_len));
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw CorruptionError(source + ": implausible rank for '" + name + "'");
    std::vector<std::size_t> shape;
    for (std::uint32_t k = 0; k < rank; ++k) shape.push_back(r.u32());
    auto it = std::find_if(layout.begin(), layout.end(),
                           [&](const TensorSpec& s) { return s.name == name; });
    if (it == layout.end()) {
      throw FormatError(source + ": unexpected parameter '" + name + "'");
    }
    if (it->shape != shape) throw FormatError(source + ": shape mismatch for '" + name + "'");
    FrameMatrix value = it->zeros();
    if (value.size() * 8 > r.remaining()) {
      throw CorruptionError(source + ": truncated payload in '" + name + "'");
    }
    for (double& v : value.values()) v = r.f64();
    store.add(*it, std::move(value));
  }
  if (r.remaining() != 0) throw CorruptionError(source + ": trailing bytes after parameters");
  return Model(std::move(cfg), std::move(store));
}

void save_checkpoint(const std::string& path, const Model& model) {
  detail::write_file(path, encode_checkpoint(model));
}

Model load_checkpoint(const std::string& path) {
  return decode_checkpoint(detail::read_file(path), path);
}

}  // namespace hafformer
