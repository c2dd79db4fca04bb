// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstddef>
#include <optional>

#include "hafformer/graph.hpp"

namespace hafformer::ops {

inline constexpr double kLayerNormEps = 1e-5;

// A·B. Throws ShapeError reporting both shapes on inner-dimension mismatch.
Var matmul(Var a, Var b);
Var transpose(Var x);
Var add(Var a, Var b);
// x + bias, bias is 1 x C and broadcast over rows.
Var add_row(Var x, Var bias);
// Elementwise product.
Var mul(Var a, Var b);
Var scale(Var x, double factor);
// x·W (+ b). W is in x out.
Var linear(Var x, Var weight, std::optional<Var> bias = std::nullopt);

struct Conv1dSpec {
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t groups = 1;
};

// Temporal convolution along the frame axis with zero padding.
// weight is Cout x (Cin/groups * kernel), laid out [o][ci * kernel + j];
// bias, when present, is 1 x Cout. Output length is
// floor((L + 2p - k) / s) + 1. Throws ConfigError on bad grouping or k > L + 2p.
Var conv1d(Var x, Var weight, std::optional<Var> bias, const Conv1dSpec& spec);

// Per-row standardization across channels, then gamma/beta (each 1 x C).
Var layer_norm(Var x, Var gamma, Var beta, double eps = kLayerNormEps);

// tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
Var gelu(Var x);
double gelu_scalar(double x);

// Row-wise softmax with max subtraction.
Var softmax_rows(Var x);

// Per-channel mean over frames: L x C -> 1 x C.
Var mean_pool_time(Var x);

// Sliding average with odd window k, stride 1, same-length output. Padded
// positions are excluded from the divisor.
Var avg_pool_time(Var x, std::size_t kernel);
Var avg_pool_channels(Var x, std::size_t kernel);

// Sum of all entries -> 1 x 1.
Var sum(Var x);
// Sum of x ⊙ weights -> 1 x 1; weights are a constant.
Var weighted_sum(Var x, const FrameMatrix& weights);

namespace testing {
// Negative-control hook: when enabled, the GELU backward rule is scaled by
// 1.01 so gradient checks must fail. Process-wide.
void corrupt_gelu_backward(bool enabled);
}  // namespace testing

}  // namespace hafformer::ops
