// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hafformer/config.hpp"
#include "hafformer/graph.hpp"
#include "hafformer/mixers.hpp"
#include "hafformer/parameter_store.hpp"

namespace hafformer {

inline constexpr std::string_view kProjectionPrefix = "projection.";

// Every tensor the model owns, in construction order:
//   projection.{weight,bias}
//   stage<s>.merge.{weight,bias}
//   stage<s>.block<b>.<block tensors>
//   final_norm.{gamma,beta}
//   head.fc1.{weight,bias}, head.fc2.{weight,bias}
std::vector<TensorSpec> model_layout(const ModelConfig& cfg);

// Shapes observed during one forward pass.
struct ForwardTrace {
  std::size_t projected_rows = 0;
  std::vector<std::size_t> stage_rows;  // frames after each stage
};

// Projection -> (merge + AFFormer blocks) per stage -> final LN -> mean pool
// over frames -> FC -> GELU -> FC.
class Model {
 public:
  // Validates cfg and initializes parameters from cfg.seed.
  explicit Model(ModelConfig cfg);
  // Adopts existing parameters; throws ShapeError unless they match the layout.
  Model(ModelConfig cfg, ParameterStore parameters);

  const ModelConfig& config() const { return config_; }
  ParameterStore& parameters() { return parameters_; }
  const ParameterStore& parameters() const { return parameters_; }

  // Adds every parameter to the graph (as a variable when `trainable`).
  VarMap bind(Graph& graph, bool trainable = true) const;

  // x must be seq_len x input_dim; returns 1 x num_classes raw logits.
  Var forward(const VarMap& params, Var x, ForwardTrace* trace = nullptr) const;

  // Graph-free convenience for inference.
  FrameMatrix logits(const FrameMatrix& x) const;

  // Adds d(root)/d(param) from a differentiated graph into the grad slots,
  // scaled by `weight`.
  void accumulate_gradients(const Graph& graph, const VarMap& params, double weight = 1.0);

  // Storage precision of graphs this model creates for itself (logits(),
  // training passes). Not part of the checkpoint.
  Precision precision() const { return precision_; }
  void set_precision(Precision precision) { precision_ = precision; }

  // Configuration-level cautions, e.g. kernel-7 mixers on very short stages.
  std::vector<std::string> warnings() const;

 private:
  ModelConfig config_;
  ParameterStore parameters_;
  Precision precision_ = Precision::kFloat64;
};

}  // namespace hafformer
