// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#include "hafformer/model.hpp"

#include "hafformer/error.hpp"
#include "hafformer/ops.hpp"

namespace hafformer {

namespace {

std::string stage_prefix(std::size_t s) { return "stage" + std::to_string(s) + "."; }

std::string block_prefix(std::size_t s, std::size_t b) {
  return stage_prefix(s) + "block" + std::to_string(b) + ".";
}

TensorSpec conv_weight(std::string name, std::size_t out, std::size_t in, std::size_t k) {
  return {std::move(name), {out, in, k}, in * k, InitKind::kFanInUniform, true};
}

TensorSpec bias_spec(std::string name, std::size_t n) {
  return {std::move(name), {n}, 1, InitKind::kZeros, false};
}

Var param(const VarMap& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw ArgumentError("model parameter '" + name + "' is not bound");
  return it->second;
}

}  // namespace

std::vector<TensorSpec> model_layout(const ModelConfig& cfg) {
  validate(cfg);
  const std::size_t d = cfg.d_model;
  std::vector<TensorSpec> out;
  out.push_back(conv_weight("projection.weight", d, cfg.input_dim, cfg.proj_kernel));
  out.push_back(bias_spec("projection.bias", d));
  for (std::size_t s = 0; s < cfg.stage_factors.size(); ++s) {
    out.push_back(conv_weight(stage_prefix(s) + "merge.weight", d, d, cfg.stage_factors[s]));
    out.push_back(bias_spec(stage_prefix(s) + "merge.bias", d));
    for (std::size_t b = 0; b < cfg.stage_depths[s]; ++b) {
      for (TensorSpec spec : block_layout(cfg.token_mixer, cfg.channel_mixer, d)) {
        spec.name = block_prefix(s, b) + spec.name;
        out.push_back(std::move(spec));
      }
    }
  }
  out.push_back({"final_norm.gamma", {d}, 1, InitKind::kOnes, false});
  out.push_back({"final_norm.beta", {d}, 1, InitKind::kZeros, false});
  out.push_back({"head.fc1.weight", {d, cfg.head_hidden}, d, InitKind::kFanInUniform, true});
  out.push_back(bias_spec("head.fc1.bias", cfg.head_hidden));
  out.push_back({"head.fc2.weight", {cfg.head_hidden, cfg.num_classes}, cfg.head_hidden,
                 InitKind::kFanInUniform, true});
  out.push_back(bias_spec("head.fc2.bias", cfg.num_classes));
  return out;
}

Model::Model(ModelConfig cfg)
    : config_(std::move(cfg)), parameters_(initialize_parameters(model_layout(config_), config_.seed)) {}

Model::Model(ModelConfig cfg, ParameterStore parameters)
    : config_(std::move(cfg)), parameters_(std::move(parameters)) {
  const std::vector<TensorSpec> layout = model_layout(config_);
  if (layout.size() != parameters_.size()) {
    throw ShapeError("model: expected " + std::to_string(layout.size()) + " tensors, got " +
                     std::to_string(parameters_.size()));
  }
  for (const TensorSpec& spec : layout) {
    if (!parameters_.contains(spec.name)) {
      throw ShapeError("model: parameter '" + spec.name + "' is missing");
    }
    Parameter& p = parameters_.at(spec.name);
    if (p.spec.shape != spec.shape) {
      throw ShapeError("model: parameter '" + spec.name + "' has the wrong shape");
    }
    // Decay and init flags follow the layout, not whatever was stored.
    p.spec = spec;
  }
}

VarMap Model::bind(Graph& graph, bool trainable) const {
  VarMap out;
  for (const auto& [name, p] : parameters_) {
    out.emplace(name, trainable ? graph.variable(p.value) : graph.constant(p.value));
  }
  return out;
}

Var Model::forward(const VarMap& params, Var x, ForwardTrace* trace) const {
  const ModelConfig& cfg = config_;
  if (x.rows() != cfg.seq_len || x.cols() != cfg.input_dim) {
    throw ShapeError("input: expected " + std::to_string(cfg.seq_len) + "x" +
                     std::to_string(cfg.input_dim) + ", got " + x.value().shape_string());
  }

  ops::Conv1dSpec proj;
  proj.kernel = cfg.proj_kernel;
  proj.padding = (cfg.proj_kernel - 1) / 2;
  Var h = ops::conv1d(x, param(params, "projection.weight"), param(params, "projection.bias"), proj);
  if (trace) {
    trace->projected_rows = h.rows();
    trace->stage_rows.clear();
  }

  const BlockOptions block_options{cfg.channel_residual, ops::kLayerNormEps};
  std::size_t expected = cfg.seq_len;
  for (std::size_t s = 0; s < cfg.stage_factors.size(); ++s) {
    const std::string prefix = stage_prefix(s);
    ops::Conv1dSpec merge;
    merge.kernel = cfg.stage_factors[s];
    merge.stride = cfg.stage_factors[s];
    h = ops::conv1d(h, param(params, prefix + "merge.weight"), param(params, prefix + "merge.bias"),
                    merge);
    expected /= cfg.stage_factors[s];
    if (h.rows() != expected || h.cols() != cfg.d_model) {
      throw ShapeError("stage " + std::to_string(s) + ": merge produced " +
                       h.value().shape_string() + ", expected " + std::to_string(expected) + "x" +
                       std::to_string(cfg.d_model));
    }
    for (std::size_t b = 0; b < cfg.stage_depths[s]; ++b) {
      h = afformer_block(cfg.token_mixer, cfg.channel_mixer, sub_map(params, block_prefix(s, b)), h,
                         block_options);
    }
    if (trace) trace->stage_rows.push_back(h.rows());
  }

  h = ops::layer_norm(h, param(params, "final_norm.gamma"), param(params, "final_norm.beta"));
  Var pooled = ops::mean_pool_time(h);
  Var hidden = ops::gelu(ops::linear(pooled, param(params, "head.fc1.weight"),
                                     param(params, "head.fc1.bias")));
  return ops::linear(hidden, param(params, "head.fc2.weight"), param(params, "head.fc2.bias"));
}

FrameMatrix Model::logits(const FrameMatrix& x) const {
  Graph graph(precision_);
  const VarMap params = bind(graph, false);
  return forward(params, graph.constant(x)).value();
}

void Model::accumulate_gradients(const Graph& graph, const VarMap& params, double weight) {
  for (auto& [name, p] : parameters_) {
    const FrameMatrix g = graph.grad(param(params, name));
    for (std::size_t i = 0; i < g.size(); ++i) p.grad.data()[i] += weight * g.data()[i];
  }
}

std::vector<std::string> Model::warnings() const {
  std::vector<std::string> out;
  const std::vector<std::size_t> lengths = stage_lengths(config_);
  for (std::size_t s = 0; s < lengths.size(); ++s) {
    if (auto w = short_sequence_warning(config_.token_mixer, lengths[s])) {
      out.push_back("stage " + std::to_string(s) + ": " + *w);
    }
  }
  return out;
}

}  // namespace hafformer
