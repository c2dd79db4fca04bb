// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#include "hafformer/gradcheck_suite.hpp"

#include "hafformer/gradcheck.hpp"
#include "hafformer/model.hpp"
#include "hafformer/random.hpp"
#include "hafformer/training.hpp"

namespace hafformer {

namespace {

FrameMatrix random_matrix(std::size_t rows, std::size_t cols, const CounterRng& rng,
                          double scale = 1.0, double offset = 0.0) {
  FrameMatrix m(rows, cols);
  auto v = m.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = offset + scale * rng.normal_at(i);
  return m;
}

// Perturbs every tensor so zero-initialized biases and unit gains are
// exercised away from their special values.
void randomize(std::vector<TensorSpec> const& layout, std::vector<FrameMatrix>& values,
               std::uint64_t seed) {
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const TensorSpec& spec = layout[i];
    const CounterRng rng(seed, fnv1a64(spec.name));
    const bool gain = spec.init == InitKind::kOnes;
    const double scale = gain ? 0.2 : 0.5;
    values[i] = random_matrix(spec.storage_rows(), spec.storage_cols(), rng, scale, gain ? 1.0 : 0.0);
  }
}

GradCheckCase finish(std::string name, const GradCheckResult& r) {
  return {std::move(name), r.max_relative_error, r.coordinates,
          r.max_relative_error < kGradCheckTolerance};
}

}  // namespace

GradCheckCase check_block(TokenMixerKind tk, ChannelMixerKind ck, std::size_t frames,
                          std::size_t d_model, std::uint64_t seed) {
  const std::vector<TensorSpec> layout = block_layout(tk, ck, d_model);
  std::vector<FrameMatrix> values(layout.size());
  randomize(layout, values, seed);
  FrameMatrix input = random_matrix(frames, d_model, CounterRng(seed, 1));
  const FrameMatrix weights = random_matrix(frames, d_model, CounterRng(seed, 2));

  std::vector<FrameMatrix*> thetas;
  for (FrameMatrix& v : values) thetas.push_back(&v);
  thetas.push_back(&input);

  const ScalarObjective objective = [&](Graph&, std::span<const Var> vars) {
    VarMap params;
    for (std::size_t i = 0; i < layout.size(); ++i) params.emplace(layout[i].name, vars[i]);
    const Var y = afformer_block(tk, ck, params, vars.back());
    return ops::weighted_sum(y, weights);
  };
  const std::string name =
      "block " + std::string(to_string(tk)) + "+" + std::string(to_string(ck));
  return finish(name, grad_check(objective, thetas));
}

std::vector<GradCheckCase> check_all_blocks(std::size_t frames, std::size_t d_model,
                                            std::uint64_t seed) {
  std::vector<GradCheckCase> out;
  std::uint64_t k = 0;
  for (TokenMixerKind tk : kAllTokenMixers)
    for (ChannelMixerKind ck : kAllChannelMixers)
      out.push_back(check_block(tk, ck, frames, d_model, seed + k++));
  return out;
}

GradCheckCase check_model(const ModelConfig& cfg, std::uint64_t seed) {
  Model model(cfg);
  const std::vector<TensorSpec> layout = model_layout(cfg);
  std::vector<FrameMatrix> values(layout.size());
  randomize(layout, values, seed);
  const FrameMatrix input = random_matrix(cfg.seq_len, cfg.input_dim, CounterRng(seed, 3));
  const int label = static_cast<int>(seed % 2);

  std::vector<FrameMatrix*> thetas;
  for (FrameMatrix& v : values) thetas.push_back(&v);

  const ScalarObjective objective = [&](Graph& graph, std::span<const Var> vars) {
    VarMap params;
    for (std::size_t i = 0; i < layout.size(); ++i) params.emplace(layout[i].name, vars[i]);
    return cross_entropy(model.forward(params, graph.constant(input)), label);
  };
  const std::string name = "model " + std::string(to_string(cfg.token_mixer)) + "+" +
                           std::string(to_string(cfg.channel_mixer)) + " seq_len " +
                           std::to_string(cfg.seq_len) + " input_dim " +
                           std::to_string(cfg.input_dim);
  return finish(name, grad_check(objective, thetas));
}

ModelConfig shrink_for_gradcheck(ModelConfig cfg) {
  cfg.seq_len = 64;
  cfg.input_dim = 16;
  validate(cfg);
  return cfg;
}

}  // namespace hafformer
