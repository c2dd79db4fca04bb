// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "hafformer/graph.hpp"

namespace hafformer {

// Builds a scalar (1x1) objective on `graph` from one variable per theta.
using ScalarObjective = std::function<Var(Graph& graph, std::span<const Var> inputs)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
};

// Compares reverse-mode gradients against central differences
// (f(θ+h) - f(θ-h)) / 2h at every coordinate of every theta. The error per
// coordinate is |g_ad - g_fd| / max(1, |g_ad|, |g_fd|). Thetas are restored
// before returning. Throws NumericError if f is non-finite at any probe.
GradCheckResult grad_check(const ScalarObjective& objective,
                           std::span<FrameMatrix* const> thetas, double step = 1e-5);

}  // namespace hafformer
