// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#include "hafformer/ops.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "hafformer/error.hpp"

namespace hafformer::ops {

namespace {

std::atomic<bool> g_corrupt_gelu{false};

Graph& graph_of(Var a) {
  if (a.graph == nullptr) throw ArgumentError("Var is not attached to a graph");
  return *a.graph;
}

Graph& graph_of(Var a, Var b) {
  if (a.graph != b.graph) throw ArgumentError("operands belong to different graphs");
  return graph_of(a);
}

void require_same_shape(const char* op, const FrameMatrix& a, const FrameMatrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

// C += A·B (transpose flags select Aᵀ / Bᵀ). Loop order keeps the innermost
// stride contiguous for the common cases.
void gemm_acc(const FrameMatrix& a, bool ta, const FrameMatrix& b, bool tb, FrameMatrix& c) {
  const std::size_t m = c.rows();
  const std::size_t n = c.cols();
  const std::size_t k = ta ? a.rows() : a.cols();
  if (!ta && !tb) {
    for (std::size_t i = 0; i < m; ++i) {
      double* ci = c.data() + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = a(i, p);
        const double* bp = b.data() + p * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
      }
    }
  } else if (ta && !tb) {
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b.data() + p * n;
      for (std::size_t i = 0; i < m; ++i) {
        const double av = a(p, i);
        double* ci = c.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
      }
    }
  } else if (!ta && tb) {
    for (std::size_t i = 0; i < m; ++i) {
      const double* ai = a.data() + i * k;
      for (std::size_t j = 0; j < n; ++j) {
        const double* bj = b.data() + j * k;
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
        c(i, j) += acc;
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += a(p, i) * b(j, p);
        c(i, j) += acc;
      }
    }
  }
}

constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluCubic = 0.044715;

double gelu_grad_scalar(double x) {
  const double u = kGeluScale * (x + kGeluCubic * x * x * x);
  const double t = std::tanh(u);
  const double du = kGeluScale * (1.0 + 3.0 * kGeluCubic * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

// Window [t - half, t + half] clipped to [0, n).
struct Window {
  std::size_t lo;
  std::size_t hi;  // exclusive
};

Window clip_window(std::size_t t, std::size_t half, std::size_t n) {
  const std::size_t lo = t >= half ? t - half : 0;
  const std::size_t hi = std::min(n, t + half + 1);
  return {lo, hi};
}

void check_pool_kernel(const char* op, std::size_t kernel) {
  if (kernel == 0 || kernel % 2 == 0) {
    throw ConfigError(std::string(op) + ": kernel must be odd, got " + std::to_string(kernel));
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const FrameMatrix& av = a.value();
  const FrameMatrix& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + av.shape_string() + " · " +
                     bv.shape_string());
  }
  FrameMatrix out(av.rows(), bv.cols());
  gemm_acc(av, false, bv, false, out);
  return g.record(std::move(out), {a, b}, [](const BackwardContext& ctx) {
    const FrameMatrix& av = ctx.input(0);
    const FrameMatrix& bv = ctx.input(1);
    if (FrameMatrix* ga = ctx.grad(0)) gemm_acc(ctx.upstream, false, bv, true, *ga);
    if (FrameMatrix* gb = ctx.grad(1)) gemm_acc(av, true, ctx.upstream, false, *gb);
  });
}

Var transpose(Var x) {
  Graph& g = graph_of(x);
  const FrameMatrix& xv = x.value();
  FrameMatrix out(xv.cols(), xv.rows());
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < xv.cols(); ++c) out(c, r) = xv(r, c);
  return g.record(std::move(out), {x}, [](const BackwardContext& ctx) {
    FrameMatrix& gx = *ctx.grad(0);
    for (std::size_t r = 0; r < gx.rows(); ++r)
      for (std::size_t c = 0; c < gx.cols(); ++c) gx(r, c) += ctx.upstream(c, r);
  });
}

Var add(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape("add", a.value(), b.value());
  FrameMatrix out = a.value();
  out += b.value();
  return g.record(std::move(out), {a, b}, [](const BackwardContext& ctx) {
    if (FrameMatrix* ga = ctx.grad(0)) *ga += ctx.upstream;
    if (FrameMatrix* gb = ctx.grad(1)) *gb += ctx.upstream;
  });
}

Var add_row(Var x, Var bias) {
  Graph& g = graph_of(x, bias);
  const FrameMatrix& xv = x.value();
  const FrameMatrix& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols()) {
    throw ShapeError("add_row: bias " + bv.shape_string() + " does not fit " +
                     xv.shape_string());
  }
  FrameMatrix out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bv(0, c);
  }
  return g.record(std::move(out), {x, bias}, [](const BackwardContext& ctx) {
    if (FrameMatrix* gx = ctx.grad(0)) *gx += ctx.upstream;
    if (FrameMatrix* gb = ctx.grad(1)) {
      for (std::size_t r = 0; r < ctx.upstream.rows(); ++r) {
        auto row = ctx.upstream.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) (*gb)(0, c) += row[c];
      }
    }
  });
}

Var mul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape("mul", a.value(), b.value());
  FrameMatrix out = a.value();
  const FrameMatrix& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= bv.data()[i];
  return g.record(std::move(out), {a, b}, [](const BackwardContext& ctx) {
    const FrameMatrix& av = ctx.input(0);
    const FrameMatrix& bv = ctx.input(1);
    const double* up = ctx.upstream.data();
    if (FrameMatrix* ga = ctx.grad(0))
      for (std::size_t i = 0; i < av.size(); ++i) ga->data()[i] += up[i] * bv.data()[i];
    if (FrameMatrix* gb = ctx.grad(1))
      for (std::size_t i = 0; i < av.size(); ++i) gb->data()[i] += up[i] * av.data()[i];
  });
}

Var scale(Var x, double factor) {
  Graph& g = graph_of(x);
  FrameMatrix out = x.value();
  for (double& v : out.values()) v *= factor;
  return g.record(std::move(out), {x}, [factor](const BackwardContext& ctx) {
    FrameMatrix& gx = *ctx.grad(0);
    for (std::size_t i = 0; i < gx.size(); ++i) gx.data()[i] += factor * ctx.upstream.data()[i];
  });
}

Var linear(Var x, Var weight, std::optional<Var> bias) {
  Var y = matmul(x, weight);
  return bias ? add_row(y, *bias) : y;
}

Var conv1d(Var x, Var weight, std::optional<Var> bias, const Conv1dSpec& spec) {
  Graph& g = graph_of(x, weight);
  const FrameMatrix& xv = x.value();
  const FrameMatrix& wv = weight.value();
  const std::size_t length = xv.rows();
  const std::size_t cin = xv.cols();
  const std::size_t cout = wv.rows();
  const std::size_t k = spec.kernel;
  const std::size_t s = spec.stride;
  const std::size_t p = spec.padding;
  const std::size_t groups = spec.groups;

  if (k == 0 || s == 0 || groups == 0) {
    throw ConfigError("conv1d: kernel, stride and groups must be positive");
  }
  if (cin % groups != 0 || cout % groups != 0) {
    throw ConfigError("conv1d: channels (" + std::to_string(cin) + " in, " +
                      std::to_string(cout) + " out) not divisible by groups " +
                      std::to_string(groups));
  }
  if (k > length + 2 * p) {
    throw ConfigError("conv1d: kernel " + std::to_string(k) + " exceeds padded length " +
                      std::to_string(length + 2 * p));
  }
  const std::size_t cin_pg = cin / groups;
  const std::size_t cout_pg = cout / groups;
  if (wv.cols() != cin_pg * k) {
    throw ShapeError("conv1d: weight " + wv.shape_string() + " does not match " +
                     std::to_string(cout) + "x(" + std::to_string(cin_pg) + "*" +
                     std::to_string(k) + ")");
  }
  if (bias) {
    if (bias->graph != &g) throw ArgumentError("conv1d: bias belongs to another graph");
    const FrameMatrix& bv = bias->value();
    if (bv.rows() != 1 || bv.cols() != cout) {
      throw ShapeError("conv1d: bias " + bv.shape_string() + " for " + std::to_string(cout) +
                       " output channels");
    }
  }
  const std::size_t out_len = (length + 2 * p - k) / s + 1;

  // Repack weights as [group][j][ci][ol] so the output-channel loop is contiguous.
  auto packed_index = [=](std::size_t grp, std::size_t j, std::size_t ci, std::size_t ol) {
    return ((grp * k + j) * cin_pg + ci) * cout_pg + ol;
  };
  std::vector<double> packed(groups * k * cin_pg * cout_pg);
  for (std::size_t o = 0; o < cout; ++o) {
    const std::size_t grp = o / cout_pg;
    const std::size_t ol = o % cout_pg;
    for (std::size_t ci = 0; ci < cin_pg; ++ci)
      for (std::size_t j = 0; j < k; ++j) packed[packed_index(grp, j, ci, ol)] = wv(o, ci * k + j);
  }

  FrameMatrix out(out_len, cout);
  for (std::size_t t = 0; t < out_len; ++t) {
    double* orow = out.data() + t * cout;
    if (bias) {
      const FrameMatrix& bv = bias->value();
      for (std::size_t o = 0; o < cout; ++o) orow[o] = bv(0, o);
    }
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t pos = t * s + j;
      if (pos < p || pos - p >= length) continue;
      const double* xrow = xv.data() + (pos - p) * cin;
      for (std::size_t grp = 0; grp < groups; ++grp) {
        double* og = orow + grp * cout_pg;
        for (std::size_t ci = 0; ci < cin_pg; ++ci) {
          const double xval = xrow[grp * cin_pg + ci];
          const double* wp = packed.data() + packed_index(grp, j, ci, 0);
          for (std::size_t ol = 0; ol < cout_pg; ++ol) og[ol] += xval * wp[ol];
        }
      }
    }
  }

  std::vector<Var> parents{x, weight};
  if (bias) parents.push_back(*bias);
  const bool has_bias = bias.has_value();
  return g.record(
      std::move(out), std::move(parents),
      [=, packed = std::move(packed)](const BackwardContext& ctx) {
        const FrameMatrix& xv = ctx.input(0);
        const FrameMatrix& up = ctx.upstream;
        FrameMatrix* gx = ctx.grad(0);
        FrameMatrix* gw = ctx.grad(1);
        FrameMatrix* gb = has_bias ? ctx.grad(2) : nullptr;

        std::vector<double> packed_grad;
        if (gw) packed_grad.assign(packed.size(), 0.0);
        for (std::size_t t = 0; t < out_len; ++t) {
          const double* urow = up.data() + t * cout;
          for (std::size_t j = 0; j < k; ++j) {
            const std::size_t pos = t * s + j;
            if (pos < p || pos - p >= length) continue;
            const std::size_t src = pos - p;
            const double* xrow = xv.data() + src * cin;
            for (std::size_t grp = 0; grp < groups; ++grp) {
              const double* ug = urow + grp * cout_pg;
              for (std::size_t ci = 0; ci < cin_pg; ++ci) {
                const std::size_t base = packed_index(grp, j, ci, 0);
                if (gw) {
                  const double xval = xrow[grp * cin_pg + ci];
                  double* gp = packed_grad.data() + base;
                  for (std::size_t ol = 0; ol < cout_pg; ++ol) gp[ol] += xval * ug[ol];
                }
                if (gx) {
                  const double* wp = packed.data() + base;
                  double acc = 0.0;
                  for (std::size_t ol = 0; ol < cout_pg; ++ol) acc += ug[ol] * wp[ol];
                  (*gx)(src, grp * cin_pg + ci) += acc;
                }
              }
            }
          }
          if (gb)
            for (std::size_t o = 0; o < cout; ++o) (*gb)(0, o) += urow[o];
        }
        if (gw) {
          for (std::size_t o = 0; o < cout; ++o) {
            const std::size_t grp = o / cout_pg;
            const std::size_t ol = o % cout_pg;
            for (std::size_t ci = 0; ci < cin_pg; ++ci)
              for (std::size_t j = 0; j < k; ++j)
                (*gw)(o, ci * k + j) += packed_grad[packed_index(grp, j, ci, ol)];
          }
        }
      });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  Graph& g = graph_of(x, gamma);
  graph_of(x, beta);
  const FrameMatrix& xv = x.value();
  const std::size_t c = xv.cols();
  if (gamma.value().rows() != 1 || gamma.value().cols() != c || beta.value().rows() != 1 ||
      beta.value().cols() != c) {
    throw ShapeError("layer_norm: gamma " + gamma.value().shape_string() + " / beta " +
                     beta.value().shape_string() + " for input " + xv.shape_string());
  }
  if (!(eps > 0.0)) throw ArgumentError("layer_norm: eps must be positive");

  // Normalized rows and per-row inverse deviation, shared with backward.
  FrameMatrix xhat(xv.rows(), c);
  std::vector<double> inv_std(xv.rows());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    auto row = xv.row(r);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(c);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) xhat(r, j) = (row[j] - mean) * inv_std[r];
  }
  FrameMatrix out(xv.rows(), c);
  const FrameMatrix& gv = gamma.value();
  const FrameMatrix& bv = beta.value();
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t j = 0; j < c; ++j) out(r, j) = gv(0, j) * xhat(r, j) + bv(0, j);

  return g.record(
      std::move(out), {x, gamma, beta},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), c](const BackwardContext& ctx) {
        const FrameMatrix& gv = ctx.input(1);
        const FrameMatrix& up = ctx.upstream;
        FrameMatrix* gx = ctx.grad(0);
        FrameMatrix* gg = ctx.grad(1);
        FrameMatrix* gbeta = ctx.grad(2);
        std::vector<double> dxhat(c);
        for (std::size_t r = 0; r < up.rows(); ++r) {
          if (gg || gbeta) {
            for (std::size_t j = 0; j < c; ++j) {
              if (gg) (*gg)(0, j) += up(r, j) * xhat(r, j);
              if (gbeta) (*gbeta)(0, j) += up(r, j);
            }
          }
          if (!gx) continue;
          double mean_d = 0.0;
          double mean_dx = 0.0;
          for (std::size_t j = 0; j < c; ++j) {
            dxhat[j] = up(r, j) * gv(0, j);
            mean_d += dxhat[j];
            mean_dx += dxhat[j] * xhat(r, j);
          }
          mean_d /= static_cast<double>(c);
          mean_dx /= static_cast<double>(c);
          for (std::size_t j = 0; j < c; ++j) {
            (*gx)(r, j) += inv_std[r] * (dxhat[j] - mean_d - xhat(r, j) * mean_dx);
          }
        }
      });
}

double gelu_scalar(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluScale * (x + kGeluCubic * x * x * x)));
}

Var gelu(Var x) {
  Graph& g = graph_of(x);
  FrameMatrix out = x.value();
  for (double& v : out.values()) v = gelu_scalar(v);
  const double fault = g_corrupt_gelu.load() ? 1.01 : 1.0;
  return g.record(std::move(out), {x}, [fault](const BackwardContext& ctx) {
    const FrameMatrix& xv = ctx.input(0);
    FrameMatrix& gx = *ctx.grad(0);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      gx.data()[i] += fault * ctx.upstream.data()[i] * gelu_grad_scalar(xv.data()[i]);
    }
  });
}

Var softmax_rows(Var x) {
  Graph& g = graph_of(x);
  FrameMatrix out = x.value();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      total += v;
    }
    for (double& v : row) v /= total;
  }
  return g.record(std::move(out), {x}, [](const BackwardContext& ctx) {
    const FrameMatrix& y = ctx.output;
    FrameMatrix& gx = *ctx.grad(0);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += ctx.upstream(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) gx(r, c) += y(r, c) * (ctx.upstream(r, c) - dot);
    }
  });
}

Var mean_pool_time(Var x) {
  Graph& g = graph_of(x);
  const FrameMatrix& xv = x.value();
  if (xv.rows() == 0) throw ShapeError("mean_pool_time: empty input");
  FrameMatrix out(1, xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < xv.cols(); ++c) out(0, c) += xv(r, c);
  const double inv = 1.0 / static_cast<double>(xv.rows());
  for (double& v : out.values()) v *= inv;
  return g.record(std::move(out), {x}, [inv](const BackwardContext& ctx) {
    FrameMatrix& gx = *ctx.grad(0);
    for (std::size_t r = 0; r < gx.rows(); ++r)
      for (std::size_t c = 0; c < gx.cols(); ++c) gx(r, c) += ctx.upstream(0, c) * inv;
  });
}

Var avg_pool_time(Var x, std::size_t kernel) {
  check_pool_kernel("avg_pool_time", kernel);
  Graph& g = graph_of(x);
  const FrameMatrix& xv = x.value();
  const std::size_t half = kernel / 2;
  const std::size_t n = xv.rows();
  FrameMatrix out(n, xv.cols());
  for (std::size_t t = 0; t < n; ++t) {
    const Window w = clip_window(t, half, n);
    const double inv = 1.0 / static_cast<double>(w.hi - w.lo);
    for (std::size_t src = w.lo; src < w.hi; ++src)
      for (std::size_t c = 0; c < xv.cols(); ++c) out(t, c) += xv(src, c);
    for (double& v : out.row(t)) v *= inv;
  }
  return g.record(std::move(out), {x}, [half](const BackwardContext& ctx) {
    FrameMatrix& gx = *ctx.grad(0);
    const std::size_t n = gx.rows();
    for (std::size_t t = 0; t < n; ++t) {
      const Window w = clip_window(t, half, n);
      const double inv = 1.0 / static_cast<double>(w.hi - w.lo);
      for (std::size_t src = w.lo; src < w.hi; ++src)
        for (std::size_t c = 0; c < gx.cols(); ++c) gx(src, c) += ctx.upstream(t, c) * inv;
    }
  });
}

Var avg_pool_channels(Var x, std::size_t kernel) {
  check_pool_kernel("avg_pool_channels", kernel);
  Graph& g = graph_of(x);
  const FrameMatrix& xv = x.value();
  const std::size_t half = kernel / 2;
  const std::size_t n = xv.cols();
  FrameMatrix out(xv.rows(), n);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const Window w = clip_window(c, half, n);
      double acc = 0.0;
      for (std::size_t src = w.lo; src < w.hi; ++src) acc += xv(r, src);
      out(r, c) = acc / static_cast<double>(w.hi - w.lo);
    }
  }
  return g.record(std::move(out), {x}, [half](const BackwardContext& ctx) {
    FrameMatrix& gx = *ctx.grad(0);
    const std::size_t n = gx.cols();
    for (std::size_t r = 0; r < gx.rows(); ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        const Window w = clip_window(c, half, n);
        const double share = ctx.upstream(r, c) / static_cast<double>(w.hi - w.lo);
        for (std::size_t src = w.lo; src < w.hi; ++src) gx(r, src) += share;
      }
    }
  });
}

Var sum(Var x) {
  Graph& g = graph_of(x);
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  return g.record(FrameMatrix(1, 1, total), {x}, [](const BackwardContext& ctx) {
    const double up = ctx.upstream(0, 0);
    for (double& v : ctx.grad(0)->values()) v += up;
  });
}

Var weighted_sum(Var x, const FrameMatrix& weights) {
  Graph& g = graph_of(x);
  require_same_shape("weighted_sum", x.value(), weights);
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) total += x.value().data()[i] * weights.data()[i];
  return g.record(FrameMatrix(1, 1, total), {x}, [weights](const BackwardContext& ctx) {
    const double up = ctx.upstream(0, 0);
    FrameMatrix& gx = *ctx.grad(0);
    for (std::size_t i = 0; i < gx.size(); ++i) gx.data()[i] += up * weights.data()[i];
  });
}

namespace testing {
void corrupt_gelu_backward(bool enabled) { g_corrupt_gelu.store(enabled); }
}  // namespace testing

}  // namespace hafformer::ops
