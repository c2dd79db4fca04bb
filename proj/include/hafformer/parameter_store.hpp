// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hafformer/matrix.hpp"
#include "hafformer/tensor_spec.hpp"

namespace hafformer {

struct Parameter {
  TensorSpec spec;
  FrameMatrix value;
  FrameMatrix grad;  // same shape as value
};

// Named learnable tensors, iterated in lexicographic name order.
class ParameterStore {
 public:
  using Map = std::map<std::string, Parameter, std::less<>>;

  // Throws ArgumentError on duplicate names, ShapeError if value does not
  // match spec.shape.
  void add(TensorSpec spec, FrameMatrix value);

  bool contains(std::string_view name) const { return entries_.find(name) != entries_.end(); }
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;

  std::size_t size() const { return entries_.size(); }
  Map::iterator begin() { return entries_.begin(); }
  Map::iterator end() { return entries_.end(); }
  Map::const_iterator begin() const { return entries_.begin(); }
  Map::const_iterator end() const { return entries_.end(); }

  // Number of scalars across all tensors, optionally skipping names that
  // start with `excluded_prefix`.
  std::size_t scalar_count(std::string_view excluded_prefix = {}) const;

  void zero_grad();
  void set_all(double value);

  // Names, shapes and values (gradients ignored).
  friend bool operator==(const ParameterStore& a, const ParameterStore& b);

 private:
  Map entries_;
};

// Draws every tensor from a counter-based stream keyed by (seed, name):
// fan-in uniform weights, zero biases, unit LN gains.
ParameterStore initialize_parameters(const std::vector<TensorSpec>& layout, std::uint64_t seed);

}  // namespace hafformer
