// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#include "hafformer/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "hafformer/error.hpp"
#include "hafformer/random.hpp"

namespace hafformer {

namespace {

constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;  // "SHUFF"

FrameMatrix model_input(const Model& model, const EmbeddingRecord& record) {
  const ModelConfig& cfg = model.config();
  if (record.features.cols() != cfg.input_dim) {
    throw DimensionError("record '" + record.id + "': " + std::to_string(record.features.cols()) +
                         " channels, model expects " + std::to_string(cfg.input_dim));
  }
  return pad_or_truncate(record.features, cfg.seq_len);
}

int argmax(const FrameMatrix& logits) {
  int best = 0;
  for (std::size_t c = 1; c < logits.cols(); ++c) {
    if (logits(0, c) > logits(0, static_cast<std::size_t>(best))) best = static_cast<int>(c);
  }
  return best;
}

struct SampleResult {
  double loss = 0.0;
  int prediction = 0;
  std::vector<FrameMatrix> grads;  // parameter name order
};

SampleResult run_sample(const Model& model, const EmbeddingRecord& record) {
  Graph graph(model.precision());
  const VarMap params = model.bind(graph, true);
  const Var logits = model.forward(params, graph.constant(model_input(model, record)));
  const Var loss = cross_entropy(logits, *record.label);
  SampleResult out;
  out.loss = loss.value()(0, 0);
  out.prediction = argmax(logits.value());
  graph.backward(loss);
  out.grads.reserve(params.size());
  for (const auto& [name, v] : params) out.grads.push_back(graph.grad(v));
  return out;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers; results are
// written by index so scheduling cannot affect them.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

Var cross_entropy(Var logits, int label) {
  const FrameMatrix& z = logits.value();
  if (z.rows() != 1) throw ShapeError("cross_entropy: logits must be 1 x C, got " + z.shape_string());
  if (label < 0 || static_cast<std::size_t>(label) >= z.cols()) {
    throw ArgumentError("cross_entropy: label " + std::to_string(label) + " outside [0, " +
                        std::to_string(z.cols()) + ")");
  }
  const std::size_t y = static_cast<std::size_t>(label);
  double mx = z(0, 0);
  for (std::size_t c = 1; c < z.cols(); ++c) mx = std::max(mx, z(0, c));
  double total = 0.0;
  for (std::size_t c = 0; c < z.cols(); ++c) total += std::exp(z(0, c) - mx);
  const double loss = std::log(total) + mx - z(0, y);
  return logits.graph->record(FrameMatrix(1, 1, loss), {logits}, [y](const BackwardContext& ctx) {
    const FrameMatrix& z = ctx.input(0);
    double mx = z(0, 0);
    for (std::size_t c = 1; c < z.cols(); ++c) mx = std::max(mx, z(0, c));
    double total = 0.0;
    for (std::size_t c = 0; c < z.cols(); ++c) total += std::exp(z(0, c) - mx);
    const double up = ctx.upstream(0, 0);
    FrameMatrix& gz = *ctx.grad(0);
    for (std::size_t c = 0; c < z.cols(); ++c) {
      const double p = std::exp(z(0, c) - mx) / total;
      gz(0, c) += up * (p - (c == y ? 1.0 : 0.0));
    }
  });
}

void AdamW::step(ParameterStore& params) {
  for (const auto& [name, p] : params) {
    if (!p.grad.all_finite()) {
      throw NumericError("adamw: non-finite gradient in '" + name + "'");
    }
  }
  ++step_;
  const AdamWOptions& o = options_;
  const double t = static_cast<double>(step_);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);
  const double decay_factor = 1.0 - o.lr * o.weight_decay;

  for (auto& [name, p] : params) {
    auto it = moments_.find(name);
    if (it == moments_.end()) {
      it = moments_.emplace(name, Moments{FrameMatrix(p.value.rows(), p.value.cols()),
                                          FrameMatrix(p.value.rows(), p.value.cols())}).first;
    }
    Moments& m = it->second;
    double* theta = p.value.data();
    const double* g = p.grad.data();
    double* m1 = m.first.data();
    double* m2 = m.second.data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      m1[i] = o.beta1 * m1[i] + (1.0 - o.beta1) * g[i];
      m2[i] = o.beta2 * m2[i] + (1.0 - o.beta2) * g[i] * g[i];
      const double m_hat = m1[i] / correction1;
      const double v_hat = m2[i] / correction2;
      const double decayed = p.spec.decay ? theta[i] * decay_factor : theta[i];
      theta[i] = decayed - o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
    }
  }
}

Metrics compute_metrics(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw ArgumentError("metrics: length mismatch");
  if (truth.empty()) throw ArgumentError("metrics: empty dataset");
  Metrics m;
  m.total = truth.size();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] > 1 || predicted[i] < 0 || predicted[i] > 1) {
      throw ArgumentError("metrics: labels must be 0 or 1");
    }
    ++m.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  }
  const double correct = static_cast<double>(m.confusion[0][0] + m.confusion[1][1]);
  m.accuracy = correct / static_cast<double>(m.total);
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < 2; ++c) {
    const double tp = static_cast<double>(m.confusion[c][c]);
    const double fp = static_cast<double>(m.confusion[1 - c][c]);
    const double fn = static_cast<double>(m.confusion[c][1 - c]);
    const double denom = 2.0 * tp + fp + fn;
    f1_sum += denom > 0.0 && tp > 0.0 ? 2.0 * tp / denom : 0.0;
  }
  m.f1 = f1_sum / 2.0;
  return m;
}

std::string to_json(const Metrics& metrics) {
  nlohmann::json j = {{"accuracy", metrics.accuracy},
                      {"f1", metrics.f1},
                      {"total", metrics.total},
                      {"confusion",
                       {{"tn", metrics.confusion[0][0]},
                        {"fp", metrics.confusion[0][1]},
                        {"fn", metrics.confusion[1][0]},
                        {"tp", metrics.confusion[1][1]}}}};
  return j.dump();
}

std::string to_json_line(const EpochLog& log) {
  nlohmann::json j = {{"epoch", log.epoch},
                      {"mean_loss", log.mean_loss},
                      {"train_acc", log.train_acc},
                      {"wall_ms", log.wall_ms}};
  return j.dump();
}

TrainingLog train(Model& model, const Dataset& dataset, const TrainOptions& options,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  TrainingLog log;
  if (options.epochs == 0) return log;
  validate(dataset);
  if (dataset.records.empty()) throw ArgumentError("train: dataset is empty");
  if (options.batch_size == 0) throw ArgumentError("train: batch_size must be >= 1");
  for (const EmbeddingRecord& r : dataset.records) {
    if (!r.label) throw ArgumentError("train: record '" + r.id + "' is unlabeled");
  }

  AdamW optimizer(options.adamw);
  const std::size_t n = dataset.records.size();
  std::vector<std::size_t> order(n);
  CounterRng shuffle_rng(options.seed, kShuffleStream);

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.next_below(i))]);
    }

    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t step = 0;
    for (std::size_t begin = 0; begin < n; begin += options.batch_size, ++step) {
      const std::size_t count = std::min(options.batch_size, n - begin);
      std::vector<SampleResult> results(count);
      parallel_for(count, options.threads, [&](std::size_t i) {
        results[i] = run_sample(model, dataset.records[order[begin + i]]);
      });

      ParameterStore& store = model.parameters();
      store.zero_grad();
      const double weight = 1.0 / static_cast<double>(count);
      for (std::size_t i = 0; i < count; ++i) {
        const SampleResult& r = results[i];
        if (!std::isfinite(r.loss)) {
          throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                             ", step " + std::to_string(step));
        }
        loss_sum += r.loss;
        if (r.prediction == *dataset.records[order[begin + i]].label) ++correct;
        std::size_t k = 0;
        for (auto& [name, p] : store) {
          const FrameMatrix& g = r.grads[k++];
          for (std::size_t e = 0; e < g.size(); ++e) p.grad.data()[e] += weight * g.data()[e];
        }
      }
      try {
        optimizer.step(store);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                           ", step " + std::to_string(step));
      }
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.mean_loss = loss_sum / static_cast<double>(n);
    entry.train_acc = static_cast<double>(correct) / static_cast<double>(n);
    entry.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    log.epochs.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  return log;
}

std::vector<int> predict(const Model& model, const Dataset& dataset, std::size_t threads) {
  std::vector<int> out(dataset.records.size());
  parallel_for(out.size(), threads, [&](std::size_t i) {
    out[i] = argmax(model.logits(model_input(model, dataset.records[i])));
  });
  return out;
}

Metrics evaluate(const Model& model, const Dataset& dataset, std::size_t threads) {
  if (dataset.records.empty()) throw ArgumentError("evaluate: dataset is empty");
  std::vector<int> truth;
  truth.reserve(dataset.records.size());
  for (const EmbeddingRecord& r : dataset.records) {
    if (!r.label) throw ArgumentError("evaluate: record '" + r.id + "' is unlabeled");
    truth.push_back(*r.label);
  }
  const std::vector<int> predicted = predict(model, dataset, threads);
  return compute_metrics(truth, predicted);
}

double mean_loss(const Model& model, const Dataset& dataset, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ArgumentError("mean_loss: no records selected");
  double total = 0.0;
  for (std::size_t i : indices) {
    const EmbeddingRecord& r = dataset.records.at(i);
    if (!r.label) throw ArgumentError("mean_loss: record '" + r.id + "' is unlabeled");
    Graph graph(model.precision());
    const VarMap params = model.bind(graph, false);
    total += cross_entropy(model.forward(params, graph.constant(model_input(model, r))), *r.label)
                 .value()(0, 0);
  }
  return total / static_cast<double>(indices.size());
}

}  // namespace hafformer
