// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#include "hafformer/parameter_store.hpp"

#include <cmath>

#include "hafformer/error.hpp"
#include "hafformer/random.hpp"

namespace hafformer {

void ParameterStore::add(TensorSpec spec, FrameMatrix value) {
  if (value.rows() != spec.storage_rows() || value.cols() != spec.storage_cols()) {
    throw ShapeError("parameter '" + spec.name + "': value " + value.shape_string() +
                     " does not match declared storage " + std::to_string(spec.storage_rows()) +
                     "x" + std::to_string(spec.storage_cols()));
  }
  std::string name = spec.name;
  if (contains(name)) throw ArgumentError("duplicate parameter name '" + name + "'");
  FrameMatrix grad(value.rows(), value.cols());
  entries_.emplace(std::move(name), Parameter{std::move(spec), std::move(value), std::move(grad)});
}

Parameter& ParameterStore::at(std::string_view name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ArgumentError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

const Parameter& ParameterStore::at(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ArgumentError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

std::size_t ParameterStore::scalar_count(std::string_view excluded_prefix) const {
  std::size_t n = 0;
  for (const auto& [name, p] : entries_) {
    if (!excluded_prefix.empty() && name.starts_with(excluded_prefix)) continue;
    n += p.value.size();
  }
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [name, p] : entries_) p.grad.fill(0.0);
}

void ParameterStore::set_all(double value) {
  for (auto& [name, p] : entries_) p.value.fill(value);
}

bool operator==(const ParameterStore& a, const ParameterStore& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  auto ia = a.entries_.begin();
  auto ib = b.entries_.begin();
  for (; ia != a.entries_.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    if (ia->second.spec.shape != ib->second.spec.shape) return false;
    if (!(ia->second.value == ib->second.value)) return false;
  }
  return true;
}

ParameterStore initialize_parameters(const std::vector<TensorSpec>& layout, std::uint64_t seed) {
  ParameterStore store;
  for (const TensorSpec& spec : layout) {
    FrameMatrix value = spec.zeros();
    switch (spec.init) {
      case InitKind::kZeros:
        break;
      case InitKind::kOnes:
        value.fill(1.0);
        break;
      case InitKind::kFanInUniform: {
        const CounterRng rng(seed, fnv1a64(spec.name));
        const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
        auto values = value.values();
        for (std::size_t i = 0; i < values.size(); ++i) {
          values[i] = (2.0 * rng.uniform_at(i) - 1.0) * bound;
        }
        break;
      }
    }
    store.add(spec, std::move(value));
  }
  return store;
}

}  // namespace hafformer
