// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "hafformer/error.hpp"
#include "hafformer/gradcheck.hpp"
#include "hafformer/graph.hpp"
#include "hafformer/matrix.hpp"
#include "hafformer/ops.hpp"
#include "hafformer/random.hpp"
#include "test_util.hpp"

using namespace hafformer;
using testutil::random_matrix;

namespace {

constexpr double kPi = 3.14159265358979323846;

double gelu_ref(double x) {
  return 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / kPi) * (x + 0.044715 * x * x * x)));
}

// Direct evaluation of a grouped, strided, zero-padded 1-D convolution with
// weight element (o, ci, j) at column ci*k + j.
FrameMatrix conv_ref(const FrameMatrix& x, const FrameMatrix& w, const FrameMatrix* b,
                     const ops::Conv1dSpec& s) {
  const std::size_t cin_pg = x.cols() / s.groups;
  const std::size_t cout = w.rows();
  const std::size_t cout_pg = cout / s.groups;
  const std::size_t out_len = (x.rows() + 2 * s.padding - s.kernel) / s.stride + 1;
  FrameMatrix y(out_len, cout);
  for (std::size_t t = 0; t < out_len; ++t) {
    for (std::size_t o = 0; o < cout; ++o) {
      const std::size_t grp = o / cout_pg;
      double acc = b ? (*b)(0, o) : 0.0;
      for (std::size_t ci = 0; ci < cin_pg; ++ci) {
        for (std::size_t j = 0; j < s.kernel; ++j) {
          const long src = static_cast<long>(t * s.stride + j) - static_cast<long>(s.padding);
          if (src < 0 || src >= static_cast<long>(x.rows())) continue;
          acc += w(o, ci * s.kernel + j) * x(static_cast<std::size_t>(src), grp * cin_pg + ci);
        }
      }
      y(t, o) = acc;
    }
  }
  return y;
}

// Objective: fixed random weighting of op(inputs).
template <typename Op>
GradCheckResult check_op(Op op, std::vector<FrameMatrix> inputs, std::uint64_t seed) {
  Graph probe;
  std::vector<Var> vars;
  for (const FrameMatrix& m : inputs) vars.push_back(probe.constant(m));
  const FrameMatrix weights =
      random_matrix(op(vars).rows(), op(vars).cols(), seed + 991);
  std::vector<FrameMatrix*> thetas;
  for (FrameMatrix& m : inputs) thetas.push_back(&m);
  return grad_check(
      [&](Graph&, std::span<const Var> in) {
        return ops::weighted_sum(op(std::vector<Var>(in.begin(), in.end())), weights);
      },
      thetas);
}

}  // namespace

TEST_SUITE("matrix") {
  TEST_CASE("construction and element access") {
    FrameMatrix m{{1, 2, 3}, {4, 5, 6}};
    CHECK(m.rows() == 2);
    CHECK(m.cols() == 3);
    CHECK(m(1, 2) == 6);
    CHECK(m.row(1)[0] == 4);
    CHECK(m.shape_string() == "2x3");
    CHECK_THROWS_AS(FrameMatrix({{1, 2}, {3}}), ShapeError);
    CHECK_THROWS_AS(FrameMatrix(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
  }

  TEST_CASE("accumulate and compare") {
    FrameMatrix a{{1, 2}}, b{{0.5, -1}};
    a += b;
    CHECK(a == FrameMatrix{{1.5, 1}});
    CHECK(max_abs_diff(a, FrameMatrix{{1.5, 1.25}}) == doctest::Approx(0.25));
    CHECK_THROWS_AS(a += FrameMatrix(2, 1), ShapeError);
    CHECK(FrameMatrix::identity(3)(1, 1) == 1.0);
    CHECK(FrameMatrix::identity(3)(1, 2) == 0.0);
  }

  TEST_CASE("finiteness") {
    FrameMatrix m(2, 2, 1.0);
    CHECK(m.all_finite());
    m(0, 1) = std::nan("");
    CHECK_FALSE(m.all_finite());
  }
}

TEST_SUITE("random") {
  TEST_CASE("counter streams are pure functions of seed, stream and counter") {
    CounterRng a(7, 3), b(7, 3), c(8, 3), d(7, 4);
    CHECK(a.bits_at(10) == b.bits_at(10));
    CHECK(a.bits_at(10) != c.bits_at(10));
    CHECK(a.bits_at(10) != d.bits_at(10));
    CHECK(a.next_bits() == b.bits_at(0));
    CHECK(a.next_bits() == b.bits_at(1));
  }

  TEST_CASE("uniform and normal moments") {
    CounterRng rng(1, 2);
    const int n = 200000;
    double su = 0, sn = 0, sn2 = 0;
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform_at(i);
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      su += u;
      const double z = rng.normal_at(i);
      sn += z;
      sn2 += z * z;
    }
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(std::abs(sn / n) < 0.01);
    CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.01));
  }

  TEST_CASE("next_below covers its range without bias") {
    CounterRng rng(3, 0);
    std::vector<int> counts(5, 0);
    for (int i = 0; i < 50000; ++i) ++counts[rng.next_below(5)];
    for (int c : counts) CHECK(std::abs(c - 10000) < 400);
  }

  TEST_CASE("fnv1a64 reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  }
}

TEST_SUITE("graph") {
  TEST_CASE("backward through a shared node accumulates") {
    Graph g;
    Var x = g.variable(FrameMatrix{{3.0}});
    Var y = ops::mul(x, x);  // x^2
    Var z = ops::add(y, x);  // x^2 + x
    g.backward(z);
    CHECK(g.grad(x)(0, 0) == doctest::Approx(7.0));
  }

  TEST_CASE("constants receive no gradient") {
    Graph g;
    Var c = g.constant(FrameMatrix{{2.0}});
    Var x = g.variable(FrameMatrix{{5.0}});
    Var y = ops::mul(c, x);
    CHECK_FALSE(g.requires_grad(c));
    CHECK(g.requires_grad(y));
    g.backward(y);
    CHECK(g.grad(x)(0, 0) == 2.0);
    CHECK(g.grad(c)(0, 0) == 0.0);
  }

  TEST_CASE("root must be scalar and backward runs once") {
    Graph g;
    Var x = g.variable(FrameMatrix(2, 2, 1.0));
    CHECK_THROWS_AS(g.backward(x), ShapeError);
    Var s = ops::sum(x);
    g.backward(s);
    CHECK_THROWS_AS(g.backward(s), ArgumentError);
  }

  TEST_CASE("mixing graphs is rejected") {
    Graph g1, g2;
    Var a = g1.variable(FrameMatrix(1, 1, 1.0));
    Var b = g2.variable(FrameMatrix(1, 1, 1.0));
    CHECK_THROWS_AS(ops::add(a, b), ArgumentError);
  }

  TEST_CASE("float32 precision rounds stored values") {
    Graph g(Precision::kFloat32);
    Var x = g.constant(FrameMatrix{{0.1}});
    CHECK(x.value()(0, 0) == static_cast<double>(0.1f));
    Graph g64;
    CHECK(g64.constant(FrameMatrix{{0.1}}).value()(0, 0) == 0.1);
  }
}

TEST_SUITE("ops forward") {
  TEST_CASE("matmul matches triple loop") {
    const FrameMatrix a = random_matrix(7, 5, 1), b = random_matrix(5, 4, 2);
    Graph g;
    const FrameMatrix c = ops::matmul(g.constant(a), g.constant(b)).value();
    for (std::size_t i = 0; i < 7; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        double acc = 0;
        for (std::size_t p = 0; p < 5; ++p) acc += a(i, p) * b(p, j);
        CHECK(c(i, j) == doctest::Approx(acc).epsilon(1e-14));
      }
    CHECK_THROWS_AS(ops::matmul(g.constant(a), g.constant(a)), ShapeError);
  }

  TEST_CASE("transpose, add, add_row, mul, scale") {
    Graph g;
    Var a = g.constant(FrameMatrix{{1, 2}, {3, 4}});
    Var b = g.constant(FrameMatrix{{10, 20}, {30, 40}});
    CHECK(ops::transpose(a).value() == FrameMatrix{{1, 3}, {2, 4}});
    CHECK(ops::add(a, b).value() == FrameMatrix{{11, 22}, {33, 44}});
    CHECK(ops::mul(a, b).value() == FrameMatrix{{10, 40}, {90, 160}});
    CHECK(ops::scale(a, -2).value() == FrameMatrix{{-2, -4}, {-6, -8}});
    CHECK(ops::add_row(a, g.constant(FrameMatrix{{1, -1}})).value() ==
          FrameMatrix{{2, 1}, {4, 3}});
    CHECK_THROWS_AS(ops::add(a, g.constant(FrameMatrix(1, 2))), ShapeError);
    CHECK_THROWS_AS(ops::add_row(a, g.constant(FrameMatrix(1, 3))), ShapeError);
  }

  TEST_CASE("linear is x W + b") {
    Graph g;
    const FrameMatrix x = random_matrix(4, 3, 3), w = random_matrix(3, 2, 4), b{{0.5, -0.5}};
    const FrameMatrix y = ops::linear(g.constant(x), g.constant(w), g.constant(b)).value();
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        double acc = b(0, j);
        for (std::size_t p = 0; p < 3; ++p) acc += x(i, p) * w(p, j);
        CHECK(y(i, j) == doctest::Approx(acc).epsilon(1e-14));
      }
  }

  TEST_CASE("conv1d matches the direct sum") {
    struct Case {
      std::size_t len, cin, cout, k, s, p, groups;
    };
    for (const Case c : {Case{16, 4, 6, 3, 1, 1, 1}, Case{16, 4, 4, 7, 1, 3, 4},
                         Case{16, 4, 4, 4, 4, 0, 1}, Case{9, 6, 4, 3, 2, 2, 2},
                         Case{5, 3, 3, 1, 1, 0, 3}}) {
      CAPTURE(c.len);
      CAPTURE(c.k);
      CAPTURE(c.groups);
      const FrameMatrix x = random_matrix(c.len, c.cin, 11);
      const FrameMatrix w = random_matrix(c.cout, c.cin / c.groups * c.k, 12);
      const FrameMatrix b = random_matrix(1, c.cout, 13);
      ops::Conv1dSpec spec{c.k, c.s, c.p, c.groups};
      Graph g;
      const FrameMatrix y =
          ops::conv1d(g.constant(x), g.constant(w), g.constant(b), spec).value();
      CHECK(max_abs_diff(y, conv_ref(x, w, &b, spec)) < 1e-13);
    }
  }

  TEST_CASE("conv1d rejects bad geometry") {
    Graph g;
    Var x = g.constant(FrameMatrix(4, 3));
    CHECK_THROWS_AS(ops::conv1d(x, g.constant(FrameMatrix(2, 9)), std::nullopt, {3, 1, 1, 2}),
                    ConfigError);
    CHECK_THROWS_AS(ops::conv1d(x, g.constant(FrameMatrix(2, 8)), std::nullopt, {3, 1, 1, 1}),
                    ShapeError);
    CHECK_THROWS_AS(ops::conv1d(x, g.constant(FrameMatrix(2, 27)), std::nullopt, {9, 1, 0, 1}),
                    ConfigError);
  }

  TEST_CASE("layer_norm normalizes each row") {
    const FrameMatrix x = random_matrix(5, 8, 21, 3.0);
    Graph g;
    const FrameMatrix y = ops::layer_norm(g.constant(x), g.constant(FrameMatrix(1, 8, 1.0)),
                                          g.constant(FrameMatrix(1, 8, 0.0)))
                              .value();
    for (std::size_t r = 0; r < 5; ++r) {
      double mean = 0, var = 0;
      for (std::size_t c = 0; c < 8; ++c) mean += x(r, c);
      mean /= 8;
      for (std::size_t c = 0; c < 8; ++c) var += (x(r, c) - mean) * (x(r, c) - mean);
      var /= 8;
      for (std::size_t c = 0; c < 8; ++c)
        CHECK(y(r, c) == doctest::Approx((x(r, c) - mean) / std::sqrt(var + 1e-5)).epsilon(1e-13));
    }
  }

  TEST_CASE("layer_norm of a constant row is beta") {
    Graph g;
    const FrameMatrix y =
        ops::layer_norm(g.constant(FrameMatrix(2, 4, 7.0)), g.constant(FrameMatrix(1, 4, 3.0)),
                        g.constant(FrameMatrix{{1, 2, 3, 4}}))
            .value();
    CHECK(y == FrameMatrix{{1, 2, 3, 4}, {1, 2, 3, 4}});
  }

  TEST_CASE("gelu values") {
    CHECK(ops::gelu_scalar(0.0) == 0.0);
    for (double v : {-3.0, -1.0, -0.1, 0.5, 1.0, 4.0})
      CHECK(ops::gelu_scalar(v) == doctest::Approx(gelu_ref(v)).epsilon(1e-15));
    CHECK(ops::gelu_scalar(1.0) == doctest::Approx(0.841192).epsilon(1e-6));
  }

  TEST_CASE("softmax rows sum to one and are shift invariant") {
    const FrameMatrix x = random_matrix(4, 6, 31, 5.0);
    FrameMatrix shifted = x;
    for (double& v : shifted.values()) v += 1000.0;
    Graph g;
    const FrameMatrix y = ops::softmax_rows(g.constant(x)).value();
    const FrameMatrix ys = ops::softmax_rows(g.constant(shifted)).value();
    for (std::size_t r = 0; r < 4; ++r) {
      double total = 0, denom = 0;
      for (std::size_t c = 0; c < 6; ++c) denom += std::exp(x(r, c));
      for (std::size_t c = 0; c < 6; ++c) {
        total += y(r, c);
        CHECK(y(r, c) == doctest::Approx(std::exp(x(r, c)) / denom).epsilon(1e-13));
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK(max_abs_diff(y, ys) < 1e-12);
  }

  TEST_CASE("pooling excludes padded positions from the divisor") {
    Graph g;
    Var x = g.constant(FrameMatrix{{1, 2, 3, 4}, {5, 6, 7, 8}, {9, 10, 11, 12}});
    CHECK(ops::mean_pool_time(x).value() == FrameMatrix{{5, 6, 7, 8}});
    const FrameMatrix t = ops::avg_pool_time(x, 3).value();
    CHECK(t(0, 0) == doctest::Approx(3.0));   // (1+5)/2
    CHECK(t(1, 0) == doctest::Approx(5.0));   // (1+5+9)/3
    CHECK(t(2, 3) == doctest::Approx(10.0));  // (8+12)/2
    const FrameMatrix c = ops::avg_pool_channels(x, 3).value();
    CHECK(c(0, 0) == doctest::Approx(1.5));
    CHECK(c(0, 1) == doctest::Approx(2.0));
    CHECK(c(2, 3) == doctest::Approx(11.5));
    CHECK_THROWS_AS(ops::avg_pool_time(x, 2), ConfigError);
  }

  TEST_CASE("pooling a constant signal is the identity") {
    Graph g;
    Var x = g.constant(FrameMatrix(5, 4, 2.5));
    CHECK(ops::avg_pool_time(x, 3).value() == FrameMatrix(5, 4, 2.5));
    CHECK(ops::avg_pool_channels(x, 3).value() == FrameMatrix(5, 4, 2.5));
  }

  TEST_CASE("sum and weighted_sum") {
    Graph g;
    Var x = g.constant(FrameMatrix{{1, 2}, {3, 4}});
    CHECK(ops::sum(x).value()(0, 0) == 10.0);
    CHECK(ops::weighted_sum(x, FrameMatrix{{1, 0}, {0, -1}}).value()(0, 0) == -3.0);
  }
}

TEST_SUITE("ops gradients") {
  using Vars = std::vector<Var>;
  constexpr double kTol = 1e-4;

  TEST_CASE("matmul / transpose / linear") {
    CHECK(check_op([](Vars v) { return ops::matmul(v[0], v[1]); },
                   {random_matrix(32, 8, 1), random_matrix(8, 6, 2)}, 1)
              .max_relative_error < kTol);
    CHECK(check_op([](Vars v) { return ops::transpose(v[0]); }, {random_matrix(5, 3, 3)}, 2)
              .max_relative_error < kTol);
    CHECK(check_op([](Vars v) { return ops::linear(v[0], v[1], v[2]); },
                   {random_matrix(16, 8, 4), random_matrix(8, 4, 5), random_matrix(1, 4, 6)}, 3)
              .max_relative_error < kTol);
  }

  TEST_CASE("elementwise") {
    const FrameMatrix a = random_matrix(32, 8, 7), b = random_matrix(32, 8, 8);
    CHECK(check_op([](Vars v) { return ops::add(v[0], v[1]); }, {a, b}, 4).max_relative_error <
          kTol);
    CHECK(check_op([](Vars v) { return ops::mul(v[0], v[1]); }, {a, b}, 5).max_relative_error <
          kTol);
    CHECK(check_op([](Vars v) { return ops::scale(v[0], -1.7); }, {a}, 6).max_relative_error <
          kTol);
    CHECK(check_op([](Vars v) { return ops::add_row(v[0], v[1]); },
                   {a, random_matrix(1, 8, 9)}, 7)
              .max_relative_error < kTol);
    CHECK(check_op([](Vars v) { return ops::gelu(v[0]); }, {random_matrix(32, 8, 10, 2.0)}, 8)
              .max_relative_error < kTol);
  }

  TEST_CASE("conv1d: dense, depthwise, strided") {
    for (const ops::Conv1dSpec spec : {ops::Conv1dSpec{3, 1, 1, 1}, ops::Conv1dSpec{7, 1, 3, 8},
                                       ops::Conv1dSpec{4, 4, 0, 1}, ops::Conv1dSpec{1, 1, 0, 8}}) {
      CAPTURE(spec.kernel);
      const std::size_t cout = 8;
      auto r = check_op(
          [spec](Vars v) { return ops::conv1d(v[0], v[1], v[2], spec); },
          {random_matrix(32, 8, 11), random_matrix(cout, 8 / spec.groups * spec.kernel, 12),
           random_matrix(1, cout, 13)},
          9);
      CHECK(r.max_relative_error < kTol);
    }
  }

  TEST_CASE("normalization and softmax") {
    CHECK(check_op([](Vars v) { return ops::layer_norm(v[0], v[1], v[2]); },
                   {random_matrix(32, 8, 14), random_matrix(1, 8, 15), random_matrix(1, 8, 16)},
                   10)
              .max_relative_error < kTol);
    CHECK(check_op([](Vars v) { return ops::softmax_rows(v[0]); }, {random_matrix(32, 8, 17)},
                   11)
              .max_relative_error < kTol);
  }

  TEST_CASE("pooling and reductions") {
    const FrameMatrix x = random_matrix(32, 8, 18);
    CHECK(check_op([](Vars v) { return ops::mean_pool_time(v[0]); }, {x}, 12)
              .max_relative_error < kTol);
    CHECK(check_op([](Vars v) { return ops::avg_pool_time(v[0], 3); }, {x}, 13)
              .max_relative_error < kTol);
    CHECK(check_op([](Vars v) { return ops::avg_pool_channels(v[0], 3); }, {x}, 14)
              .max_relative_error < kTol);
    CHECK(check_op([](Vars v) { return ops::sum(v[0]); }, {x}, 15).max_relative_error < kTol);
  }
}

TEST_SUITE("grad_check") {
  TEST_CASE("reports coordinates and exact agreement on a quadratic") {
    FrameMatrix theta{{1.0, -2.0, 0.5}};
    FrameMatrix* thetas[] = {&theta};
    const GradCheckResult r = grad_check(
        [](Graph&, std::span<const Var> in) { return ops::sum(ops::mul(in[0], in[0])); }, thetas);
    CHECK(r.coordinates == 3);
    CHECK(r.max_relative_error < 1e-9);
    CHECK(theta == FrameMatrix{{1.0, -2.0, 0.5}});  // probes restore values
  }

  TEST_CASE("detects a corrupted backward rule") {
    FrameMatrix theta = random_matrix(6, 4, 40, 2.0);
    FrameMatrix* thetas[] = {&theta};
    auto objective = [](Graph&, std::span<const Var> in) { return ops::sum(ops::gelu(in[0])); };
    CHECK(grad_check(objective, thetas).max_relative_error < 1e-6);
    ops::testing::corrupt_gelu_backward(true);
    const double err = grad_check(objective, thetas).max_relative_error;
    ops::testing::corrupt_gelu_backward(false);
    CHECK(err > 1e-3);
  }

  TEST_CASE("rejects non-scalar objectives and bad steps") {
    FrameMatrix theta(2, 2, 1.0);
    FrameMatrix* thetas[] = {&theta};
    auto id = [](Graph&, std::span<const Var> in) { return in[0]; };
    CHECK_THROWS_AS(grad_check(id, thetas), ShapeError);
    auto s = [](Graph&, std::span<const Var> in) { return ops::sum(in[0]); };
    CHECK_THROWS_AS(grad_check(s, thetas, 0.0), ArgumentError);
  }
}
