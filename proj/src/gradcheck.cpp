// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#include "hafformer/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "hafformer/error.hpp"

namespace hafformer {

namespace {

double evaluate(const ScalarObjective& objective, std::span<FrameMatrix* const> thetas) {
  Graph graph;
  std::vector<Var> inputs;
  inputs.reserve(thetas.size());
  for (FrameMatrix* theta : thetas) inputs.push_back(graph.constant(*theta));
  const Var out = objective(graph, inputs);
  if (out.rows() != 1 || out.cols() != 1) {
    throw ShapeError("grad_check: objective must be 1x1, got " + out.value().shape_string());
  }
  const double value = out.value()(0, 0);
  if (!std::isfinite(value)) throw NumericError("grad_check: objective is not finite");
  return value;
}

}  // namespace

GradCheckResult grad_check(const ScalarObjective& objective,
                           std::span<FrameMatrix* const> thetas, double step) {
  if (!(step > 0.0)) throw ArgumentError("grad_check: step must be positive");

  std::vector<FrameMatrix> analytic;
  {
    Graph graph;
    std::vector<Var> inputs;
    for (FrameMatrix* theta : thetas) inputs.push_back(graph.variable(*theta));
    const Var out = objective(graph, inputs);
    if (out.rows() != 1 || out.cols() != 1) {
      throw ShapeError("grad_check: objective must be 1x1, got " + out.value().shape_string());
    }
    if (!std::isfinite(out.value()(0, 0))) {
      throw NumericError("grad_check: objective is not finite");
    }
    graph.backward(out);
    for (const Var& v : inputs) analytic.push_back(graph.grad(v));
  }

  GradCheckResult result;
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    FrameMatrix& theta = *thetas[t];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta.data()[i];
      theta.data()[i] = saved + step;
      const double plus = evaluate(objective, thetas);
      theta.data()[i] = saved - step;
      const double minus = evaluate(objective, thetas);
      theta.data()[i] = saved;

      const double fd = (plus - minus) / (2.0 * step);
      const double ad = analytic[t].data()[i];
      const double err = std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_tensor = t;
        result.worst_index = i;
      }
      ++result.coordinates;
    }
  }
  return result;
}

}  // namespace hafformer
