// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "hafformer/checkpoint.hpp"
#include "hafformer/error.hpp"
#include "hafformer/gradcheck_suite.hpp"
#include "hafformer/model.hpp"
#include "test_util.hpp"

using namespace hafformer;
using testutil::random_matrix;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.seq_len = 64;
  cfg.input_dim = 16;
  cfg.seed = 5;
  return cfg;
}

// Perturb every parameter so zero biases and unit gains do not hide bugs.
void jitter(Model& m, std::uint64_t seed) {
  std::uint64_t k = 0;
  for (auto& [name, p] : m.parameters()) {
    const FrameMatrix r = random_matrix(p.value.rows(), p.value.cols(), seed + ++k, 0.3);
    for (std::size_t i = 0; i < r.size(); ++i) p.value.values()[i] += r.values()[i];
  }
}

using Rows = std::vector<std::vector<double>>;

Rows to_rows(const FrameMatrix& m) {
  Rows out(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  return out;
}

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(0.7978845608028654 * (x + 0.044715 * x * x * x)));
}

// Independent straight-line evaluation of the MSDW + GEGLU network using
// nested loops over plain vectors.
struct Reference {
  const ParameterStore& p;
  const ModelConfig& cfg;

  const FrameMatrix& at(const std::string& n) const { return p.at(n).value; }

  Rows conv(const Rows& x, const std::string& name, std::size_t k, std::size_t stride,
            std::size_t pad) const {
    const FrameMatrix& w = at(name + ".weight");
    const FrameMatrix& b = at(name + ".bias");
    const std::size_t len = x.size(), cin = x[0].size(), cout = w.rows();
    const std::size_t out_len = (len + 2 * pad - k) / stride + 1;
    Rows y(out_len, std::vector<double>(cout));
    for (std::size_t t = 0; t < out_len; ++t)
      for (std::size_t o = 0; o < cout; ++o) {
        double acc = b(0, o);
        for (std::size_t j = 0; j < k; ++j) {
          const long src = static_cast<long>(t * stride + j) - static_cast<long>(pad);
          if (src < 0 || src >= static_cast<long>(len)) continue;
          for (std::size_t ci = 0; ci < cin; ++ci) acc += w(o, ci * k + j) * x[src][ci];
        }
        y[t][o] = acc;
      }
    return y;
  }

  Rows norm(const Rows& x, const std::string& prefix) const {
    const FrameMatrix& g = at(prefix + ".gamma");
    const FrameMatrix& b = at(prefix + ".beta");
    Rows y = x;
    for (auto& row : y) {
      double mean = 0, var = 0;
      for (double v : row) mean += v;
      mean /= static_cast<double>(row.size());
      for (double v : row) var += (v - mean) * (v - mean);
      var /= static_cast<double>(row.size());
      for (std::size_t c = 0; c < row.size(); ++c)
        row[c] = (row[c] - mean) / std::sqrt(var + 1e-5) * g(0, c) + b(0, c);
    }
    return y;
  }

  Rows dense(const Rows& x, const std::string& name) const {
    const FrameMatrix& w = at(name + ".weight");
    const FrameMatrix& b = at(name + ".bias");
    Rows y(x.size(), std::vector<double>(w.cols()));
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < w.cols(); ++j) {
        double acc = b(0, j);
        for (std::size_t q = 0; q < w.rows(); ++q) acc += x[i][q] * w(q, j);
        y[i][j] = acc;
      }
    return y;
  }

  Rows block(const Rows& x, const std::string& pre) const {
    const Rows z = norm(x, pre + "token.norm");
    const FrameMatrix& w7 = at(pre + "token.depthwise7.weight");
    const FrameMatrix& w1 = at(pre + "token.depthwise1.weight");
    Rows mid = x;
    for (std::size_t t = 0; t < x.size(); ++t)
      for (std::size_t c = 0; c < x[0].size(); ++c) {
        double acc = w1(c, 0) * z[t][c];
        for (int j = 0; j < 7; ++j) {
          const long src = static_cast<long>(t) + j - 3;
          if (src >= 0 && src < static_cast<long>(x.size())) acc += w7(c, j) * z[src][c];
        }
        mid[t][c] += gelu(acc);
      }
    const Rows z2 = norm(mid, pre + "channel.norm");
    const Rows gate = dense(z2, pre + "channel.gate");
    const Rows val = dense(z2, pre + "channel.value");
    Rows h = gate;
    for (std::size_t i = 0; i < h.size(); ++i)
      for (std::size_t j = 0; j < h[0].size(); ++j) h[i][j] = gelu(gate[i][j]) * val[i][j];
    const Rows out = dense(h, pre + "channel.out");
    Rows y = mid;
    for (std::size_t i = 0; i < y.size(); ++i)
      for (std::size_t j = 0; j < y[0].size(); ++j) y[i][j] += out[i][j];
    return y;
  }

  std::vector<double> logits(const FrameMatrix& input) const {
    Rows h = conv(to_rows(input), "projection", cfg.proj_kernel, 1, (cfg.proj_kernel - 1) / 2);
    for (std::size_t s = 0; s < cfg.stage_factors.size(); ++s) {
      const std::string sp = "stage" + std::to_string(s) + ".";
      h = conv(h, sp + "merge", cfg.stage_factors[s], cfg.stage_factors[s], 0);
      for (std::size_t b = 0; b < cfg.stage_depths[s]; ++b)
        h = block(h, sp + "block" + std::to_string(b) + ".");
    }
    h = norm(h, "final_norm");
    Rows pooled(1, std::vector<double>(h[0].size()));
    for (const auto& row : h)
      for (std::size_t c = 0; c < row.size(); ++c) pooled[0][c] += row[c] / static_cast<double>(h.size());
    Rows hidden = dense(pooled, "head.fc1");
    for (double& v : hidden[0]) v = gelu(v);
    return dense(hidden, "head.fc2")[0];
  }
};

}  // namespace

TEST_CASE("layout names and shapes for the default configuration") {
  const auto layout = model_layout(ModelConfig{});
  std::set<std::string> names;
  for (const TensorSpec& s : layout) CHECK(names.insert(s.name).second);
  for (const char* n :
       {"projection.weight", "projection.bias", "stage0.merge.weight", "stage2.merge.bias",
        "stage0.block1.token.depthwise7.weight", "stage2.block0.channel.out.bias",
        "final_norm.gamma", "head.fc1.weight", "head.fc2.bias"})
    CHECK(names.count(n) == 1);
  CHECK(names.count("stage2.block1.token.norm.gamma") == 0);
  const Model m{ModelConfig{}};
  CHECK(m.parameters().at("projection.weight").spec.shape == std::vector<std::size_t>{8, 1024, 3});
  CHECK(m.parameters().at("projection.weight").value.rows() == 8);
  CHECK(m.parameters().at("projection.weight").value.cols() == 3072);
  CHECK(m.parameters().at("stage1.merge.weight").spec.shape == std::vector<std::size_t>{8, 8, 2});
  CHECK(m.parameters().at("head.fc2.weight").spec.shape == std::vector<std::size_t>{16, 2});
}

TEST_CASE("scalar counts") {
  ModelConfig cfg;
  cfg.token_mixer = TokenMixerKind::kSelfAttention;
  cfg.channel_mixer = ChannelMixerKind::kFfn;
  const Model m(cfg);
  CHECK(m.parameters().scalar_count(kProjectionPrefix) == 5090);
  CHECK(m.parameters().scalar_count() == 5090 + 8 * 1024 * 3 + 8);
  cfg.token_mixer = TokenMixerKind::kPool;
  cfg.channel_mixer = ChannelMixerKind::kPool;
  CHECK(Model(cfg).parameters().scalar_count(kProjectionPrefix) == 890);
}

TEST_CASE("initialization is deterministic and follows the init rules") {
  const Model a{small_config()}, b{small_config()};
  CHECK(a.parameters() == b.parameters());
  ModelConfig other = small_config();
  other.seed = 6;
  CHECK_FALSE(Model(other).parameters() == a.parameters());
  for (const auto& [name, p] : a.parameters()) {
    CAPTURE(name);
    for (double v : p.value.values()) {
      if (p.spec.init == InitKind::kZeros) CHECK(v == 0.0);
      if (p.spec.init == InitKind::kOnes) CHECK(v == 1.0);
      if (p.spec.init == InitKind::kFanInUniform)
        CHECK(std::abs(v) <= 1.0 / std::sqrt(static_cast<double>(p.spec.fan_in)));
    }
  }
}

TEST_CASE("tensor values depend only on seed and name") {
  // The same tensor name draws the same values regardless of what else the
  // model contains.
  ModelConfig a = small_config(), b = small_config();
  b.token_mixer = TokenMixerKind::kSelfAttention;
  const Model ma(a), mb(b);
  CHECK(ma.parameters().at("stage0.merge.weight").value ==
        mb.parameters().at("stage0.merge.weight").value);
}

TEST_CASE("stage lengths at paper scale are 3200 -> 800 -> 400 -> 200") {
  const Model m{ModelConfig{}};
  Graph g;
  ForwardTrace trace;
  const Var y = m.forward(m.bind(g, false), g.constant(random_matrix(3200, 1024, 1)), &trace);
  CHECK(trace.projected_rows == 3200);
  CHECK(trace.stage_rows == std::vector<std::size_t>{800, 400, 200});
  CHECK(y.rows() == 1);
  CHECK(y.cols() == 2);
  CHECK(stage_lengths(ModelConfig{}) == std::vector<std::size_t>{800, 400, 200});
}

TEST_CASE("zero parameters give zero logits") {
  Model m{small_config()};
  m.parameters().set_all(0.0);
  CHECK(m.logits(random_matrix(64, 16, 2)) == FrameMatrix{{0.0, 0.0}});
}

TEST_CASE("graph forward agrees with a straight-line oracle") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    ModelConfig cfg = small_config();
    cfg.seed = seed;
    Model m(cfg);
    jitter(m, seed * 31);
    const FrameMatrix x = random_matrix(64, 16, seed + 9);
    const FrameMatrix got = m.logits(x);
    const std::vector<double> want = Reference{m.parameters(), cfg}.logits(x);
    CHECK(std::abs(got(0, 0) - want[0]) < 1e-9);
    CHECK(std::abs(got(0, 1) - want[1]) < 1e-9);
  }
}

TEST_CASE("wrong input geometry is a shape error naming the input") {
  const Model m{small_config()};
  try {
    m.logits(FrameMatrix(63, 16));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("input") != std::string::npos);
  }
  CHECK_THROWS_AS(m.logits(FrameMatrix(64, 15)), ShapeError);
}

TEST_CASE("presets") {
  CHECK(preset_stages(HierarchyPreset::kH2).factors == std::vector<std::size_t>{4, 2});
  CHECK(preset_stages(HierarchyPreset::kH3_1).depths == std::vector<std::size_t>{2, 2, 1});
  CHECK(preset_stages(HierarchyPreset::kH3_2).depths == std::vector<std::size_t>{2, 2, 2});
  CHECK(preset_stages(HierarchyPreset::kH4).factors == std::vector<std::size_t>{4, 2, 2, 2});
  CHECK(preset_stages(HierarchyPreset::kH4).depths == std::vector<std::size_t>{2, 2, 2, 1});
  for (HierarchyPreset p : kAllPresets) CHECK(parse_preset(to_string(p)) == p);
  CHECK_FALSE(parse_preset("h5").has_value());
  const ModelConfig h4 = apply_preset(HierarchyPreset::kH4, ModelConfig{});
  CHECK(stage_lengths(h4) == std::vector<std::size_t>{800, 400, 200, 100});
  CHECK(total_blocks(h4) == 7);
  ModelConfig odd;
  odd.seq_len = 3202;
  CHECK_THROWS_AS(apply_preset(HierarchyPreset::kH3_1, odd), ConfigError);
}

TEST_CASE("validation names the offending field") {
  auto message = [](ModelConfig cfg) {
    try {
      validate(cfg);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  ModelConfig c;
  c.seq_len = 100;
  CHECK(message(c).starts_with("seq_len"));
  c = {};
  c.proj_kernel = 2;
  CHECK(message(c).starts_with("proj_kernel"));
  c = {};
  c.stage_depths = {2, 2};
  CHECK(message(c).starts_with("stage_depths"));
  c = {};
  c.d_model = 0;
  CHECK(message(c).starts_with("d_model"));
  CHECK(message(ModelConfig{}).empty());
}

TEST_CASE("short final stage is legal but warned about") {
  ModelConfig cfg = small_config();
  cfg.seq_len = 32;  // stages 8, 4, 2
  const Model m(cfg);
  CHECK(m.warnings().size() == 2);
  CHECK(m.logits(random_matrix(32, 16, 3)).all_finite());
  ModelConfig roomy = small_config();
  roomy.seq_len = 128;  // stages 32, 16, 8
  CHECK(Model(roomy).warnings().empty());
}

TEST_CASE("adopting parameters checks the layout") {
  const Model m{small_config()};
  ModelConfig other = small_config();
  other.channel_mixer = ChannelMixerKind::kFfn;
  CHECK_THROWS_AS(Model(other, m.parameters()), ShapeError);
  CHECK(Model(small_config(), m.parameters()).parameters() == m.parameters());
}

TEST_CASE("checkpoint round trip is bit exact") {
  ModelConfig cfg = small_config();
  cfg.token_mixer = TokenMixerKind::kIsc;
  cfg.channel_mixer = ChannelMixerKind::kFfn;
  cfg.channel_residual = false;
  cfg.seed = 123456789012345ULL;
  Model m(cfg);
  jitter(m, 4);
  const std::string bytes = encode_checkpoint(m);
  CHECK(bytes.substr(0, 4) == "HAFC");
  const Model back = decode_checkpoint(bytes);
  CHECK(back.config() == cfg);
  CHECK(back.parameters() == m.parameters());
  CHECK(encode_checkpoint(back) == bytes);

  const auto dir = testutil::temp_dir("ckpt");
  save_checkpoint((dir / "m.hafc").string(), m);
  CHECK(load_checkpoint((dir / "m.hafc").string()).parameters() == m.parameters());
}

TEST_CASE("checkpoint corruption is classified") {
  const std::string bytes = encode_checkpoint(Model{small_config()});
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
  bad = bytes;
  bad[4] = 9;  // version
  CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), CorruptionError);
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, 10)), CorruptionError);
  CHECK_THROWS_AS(decode_checkpoint(bytes + "x"), CorruptionError);
  // Too short to carry a magic number: not recognisably a checkpoint.
  CHECK_THROWS_AS(decode_checkpoint(""), FormatError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/dir/m.hafc"), IoError);
}

TEST_CASE("end-to-end gradient of the shrunken model") {
  const GradCheckCase c = check_model(shrink_for_gradcheck(ModelConfig{}), 17);
  CAPTURE(c.max_relative_error);
  CHECK(c.coordinates > 3000);
  CHECK(c.passed);
  ModelConfig sa = ModelConfig{};
  sa.token_mixer = TokenMixerKind::kSelfAttention;
  sa.channel_mixer = ChannelMixerKind::kFfn;
  CHECK(check_model(shrink_for_gradcheck(sa), 18).passed);
}

TEST_CASE("float32 mode stays close to float64") {
  Model m{small_config()};
  jitter(m, 8);
  const FrameMatrix x = random_matrix(64, 16, 4);
  const FrameMatrix y64 = m.logits(x);
  m.set_precision(Precision::kFloat32);
  const FrameMatrix y32 = m.logits(x);
  CHECK(max_abs_diff(y64, y32) < 1e-4);
  CHECK_FALSE(y64 == y32);
}
