// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hafformer/dataset.hpp"
#include "hafformer/graph.hpp"
#include "hafformer/model.hpp"

namespace hafformer {

// -log softmax(logits)[label] for 1 x C logits, via max subtraction.
// Backward is softmax(logits) - one_hot(label). Throws ArgumentError when
// label is outside [0, C).
Var cross_entropy(Var logits, int label);

struct AdamWOptions {
  double lr = 2e-3;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Decoupled weight decay:
//   θ <- θ·(1 - lr·wd) - lr · m̂ / (sqrt(v̂) + eps)
// Parameters whose spec has decay == false (biases, norm gains) skip the
// decay factor.
class AdamW {
 public:
  explicit AdamW(AdamWOptions options = {}) : options_(options) {}

  // Consumes the grad slots of `params`. Throws NumericError, leaving
  // parameters and state untouched, if any gradient is non-finite.
  void step(ParameterStore& params);

  std::uint64_t steps() const { return step_; }
  const AdamWOptions& options() const { return options_; }

 private:
  struct Moments {
    FrameMatrix first;
    FrameMatrix second;
  };

  AdamWOptions options_;
  std::uint64_t step_ = 0;
  std::map<std::string, Moments, std::less<>> moments_;
};

struct Metrics {
  double accuracy = 0.0;
  double f1 = 0.0;  // macro average over both classes; empty class scores 0
  std::array<std::array<std::size_t, 2>, 2> confusion{};  // [truth][prediction]
  std::size_t total = 0;
};

Metrics compute_metrics(std::span<const int> truth, std::span<const int> predicted);
std::string to_json(const Metrics& metrics);

struct TrainOptions {
  std::size_t epochs = 80;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;  // shuffle stream
  AdamWOptions adamw;
  // Per-sample passes within a batch may run on this many threads; the
  // gradient reduction order is fixed, so results do not depend on it.
  std::size_t threads = 1;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double train_acc = 0.0;
  double wall_ms = 0.0;
};

// {"epoch":..,"mean_loss":..,"train_acc":..,"wall_ms":..}
std::string to_json_line(const EpochLog& log);

struct TrainingLog {
  std::vector<EpochLog> epochs;
};

// Mini-batch AdamW on per-sample cross-entropy; batch loss is the mean over
// the batch. Records are padded/truncated to the model's seq_len.
TrainingLog train(Model& model, const Dataset& dataset, const TrainOptions& options,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

// Arg-max class per record (ties go to class 0).
std::vector<int> predict(const Model& model, const Dataset& dataset, std::size_t threads = 1);

// Throws ArgumentError on an empty or unlabeled dataset.
Metrics evaluate(const Model& model, const Dataset& dataset, std::size_t threads = 1);

// Mean cross-entropy over the given records at the current parameters.
double mean_loss(const Model& model, const Dataset& dataset, std::span<const std::size_t> indices);

}  // namespace hafformer
