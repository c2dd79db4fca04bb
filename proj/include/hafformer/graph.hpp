// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "hafformer/matrix.hpp"

namespace hafformer {

// Storage precision of node values. Float32 rounds every recorded value to
// single precision; arithmetic inside a primitive still runs in double.
enum class Precision { kFloat64, kFloat32 };

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  std::size_t index = 0;

  const FrameMatrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

// What a backward rule sees: the upstream gradient and one accumulator per
// parent (nullptr when that parent needs no gradient).
struct BackwardContext {
  const Graph& graph;
  const FrameMatrix& output;
  const FrameMatrix& upstream;
  std::span<const std::size_t> parents;
  std::span<FrameMatrix* const> grads;

  const FrameMatrix& input(std::size_t i) const;
  FrameMatrix* grad(std::size_t i) const { return grads[i]; }
};

using BackwardFn = std::function<void(const BackwardContext&)>;

// Append-only tape. Nodes are recorded in evaluation order, so reverse index
// order is a reverse topological order of the computation.
class Graph {
 public:
  explicit Graph(Precision precision = Precision::kFloat64) : precision_(precision) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(FrameMatrix value);
  Var variable(FrameMatrix value);
  Var record(FrameMatrix value, std::vector<Var> parents, BackwardFn backward);

  const FrameMatrix& value(Var v) const { return nodes_.at(v.index).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.index).requires_grad; }
  // Gradient accumulated by backward(); a zero matrix if nothing reached v.
  FrameMatrix grad(Var v) const;

  // Seeds d(root)/d(root) = 1 and propagates. root must be 1x1.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }
  Precision precision() const { return precision_; }

 private:
  struct Node {
    FrameMatrix value;
    FrameMatrix grad;
    bool requires_grad = false;
    std::vector<std::size_t> parents;
    BackwardFn backward;
  };

  Var push(Node node);
  void check_owner(Var v) const;

  Precision precision_;
  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace hafformer
