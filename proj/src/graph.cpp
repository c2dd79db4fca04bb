// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#include "hafformer/graph.hpp"

#include "hafformer/error.hpp"

namespace hafformer {

namespace {

void round_to_float(FrameMatrix& m) {
  for (double& v : m.values()) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace

const FrameMatrix& Var::value() const { return graph->value(*this); }

const FrameMatrix& BackwardContext::input(std::size_t i) const {
  return graph.value(Var{const_cast<Graph*>(&graph), parents[i]});
}

Var Graph::push(Node node) {
  if (precision_ == Precision::kFloat32) round_to_float(node.value);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

void Graph::check_owner(Var v) const {
  if (v.graph != this || v.index >= nodes_.size()) {
    throw ArgumentError("Var does not belong to this graph");
  }
}

Var Graph::constant(FrameMatrix value) {
  Node node;
  node.value = std::move(value);
  return push(std::move(node));
}

Var Graph::variable(FrameMatrix value) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = true;
  return push(std::move(node));
}

Var Graph::record(FrameMatrix value, std::vector<Var> parents, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  node.parents.reserve(parents.size());
  for (const Var& p : parents) {
    check_owner(p);
    node.parents.push_back(p.index);
    node.requires_grad = node.requires_grad || nodes_[p.index].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  return push(std::move(node));
}

FrameMatrix Graph::grad(Var v) const {
  check_owner(v);
  const Node& node = nodes_[v.index];
  if (node.grad.empty()) return FrameMatrix(node.value.rows(), node.value.cols());
  return node.grad;
}

void Graph::backward(Var root) {
  check_owner(root);
  if (backward_done_) throw ArgumentError("backward: graph already differentiated");
  Node& head = nodes_[root.index];
  if (head.value.rows() != 1 || head.value.cols() != 1) {
    throw ShapeError("backward: root must be 1x1, got " + head.value.shape_string());
  }
  backward_done_ = true;
  if (!head.requires_grad) return;
  head.grad = FrameMatrix(1, 1, 1.0);

  std::vector<FrameMatrix*> grads;
  for (std::size_t i = root.index + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.backward || node.grad.empty()) continue;
    grads.assign(node.parents.size(), nullptr);
    for (std::size_t p = 0; p < node.parents.size(); ++p) {
      Node& parent = nodes_[node.parents[p]];
      if (!parent.requires_grad) continue;
      if (parent.grad.empty()) {
        parent.grad = FrameMatrix(parent.value.rows(), parent.value.cols());
      }
      grads[p] = &parent.grad;
    }
    node.backward(BackwardContext{*this, node.value, node.grad, node.parents, grads});
  }
}

}  // namespace hafformer
