// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#include "hafformer/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "hafformer/error.hpp"

namespace hafformer {

FrameMatrix::FrameMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

FrameMatrix::FrameMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("FrameMatrix: " + std::to_string(data_.size()) +
                     " values do not fill a " + shape_string() + " matrix");
  }
}

FrameMatrix::FrameMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("FrameMatrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

FrameMatrix FrameMatrix::identity(std::size_t n) {
  FrameMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void FrameMatrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool FrameMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string FrameMatrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

FrameMatrix& FrameMatrix::operator+=(const FrameMatrix& other) {
  if (!same_shape(other)) {
    throw ShapeError("accumulate: " + shape_string() + " += " + other.shape_string());
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

double max_abs_diff(const FrameMatrix& a, const FrameMatrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("max_abs_diff: " + a.shape_string() + " vs " + b.shape_string());
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  }
  return worst;
}

}  // namespace hafformer
