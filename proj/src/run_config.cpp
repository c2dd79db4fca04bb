// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#include "hafformer/run_config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <optional>

#include "binary_io.hpp"
#include "hafformer/error.hpp"
#include "hafformer/random.hpp"

namespace hafformer {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::uint64_t to_unsigned(std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

std::size_t to_size(std::string_view v) { return static_cast<std::size_t>(to_unsigned(v)); }

double to_double(std::string_view v) {
  // from_chars for double is missing on older libstdc++; strtod on a copy.
  const std::string copy(v);
  char* end = nullptr;
  const double out = std::strtod(copy.c_str(), &end);
  if (copy.empty() || end != copy.c_str() + copy.size()) {
    throw ConfigError("expected a number, got '" + copy + "'");
  }
  return out;
}

bool to_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("expected true/false, got '" + std::string(v) + "'");
}

std::vector<std::size_t> to_list(std::string_view v) {
  std::vector<std::size_t> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(to_size(trim(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError("expected a comma-separated list");
  return out;
}

using Setter = std::function<void(RunConfig&, std::string_view)>;

struct Pending {
  std::optional<HierarchyPreset> preset;
  std::optional<std::vector<std::size_t>> factors;
  std::optional<std::vector<std::size_t>> depths;
};

}  // namespace

RunConfig parse_run_config(std::string_view text, const std::string& source) {
  RunConfig cfg;
  Pending pending;
  std::map<std::string, std::size_t, std::less<>> lines;

  const std::map<std::string, Setter, std::less<>> setters = {
      {"token_mixer", [](RunConfig& c, std::string_view v) {
         auto k = parse_token_mixer(v);
         if (!k) throw ConfigError("unknown token mixer '" + std::string(v) + "'");
         c.model.token_mixer = *k;
       }},
      {"channel_mixer", [](RunConfig& c, std::string_view v) {
         auto k = parse_channel_mixer(v);
         if (!k) throw ConfigError("unknown channel mixer '" + std::string(v) + "'");
         c.model.channel_mixer = *k;
       }},
      {"preset", [&](RunConfig&, std::string_view v) {
         auto p = parse_preset(v);
         if (!p) throw ConfigError("unknown preset '" + std::string(v) + "'");
         pending.preset = *p;
       }},
      {"stage_factors", [&](RunConfig&, std::string_view v) { pending.factors = to_list(v); }},
      {"stage_depths", [&](RunConfig&, std::string_view v) { pending.depths = to_list(v); }},
      {"input_dim", [](RunConfig& c, std::string_view v) { c.model.input_dim = to_size(v); }},
      {"seq_len", [](RunConfig& c, std::string_view v) { c.model.seq_len = to_size(v); }},
      {"d_model", [](RunConfig& c, std::string_view v) { c.model.d_model = to_size(v); }},
      {"proj_kernel", [](RunConfig& c, std::string_view v) { c.model.proj_kernel = to_size(v); }},
      {"head_hidden", [](RunConfig& c, std::string_view v) { c.model.head_hidden = to_size(v); }},
      {"num_classes", [](RunConfig& c, std::string_view v) { c.model.num_classes = to_size(v); }},
      {"channel_residual", [](RunConfig& c, std::string_view v) { c.model.channel_residual = to_bool(v); }},
      {"seed", [](RunConfig& c, std::string_view v) {
         c.model.seed = to_unsigned(v);
         c.train.seed = c.model.seed;
       }},
      {"epochs", [](RunConfig& c, std::string_view v) { c.train.epochs = to_size(v); }},
      {"batch_size", [](RunConfig& c, std::string_view v) {
         c.train.batch_size = to_size(v);
         if (c.train.batch_size == 0) throw ConfigError("batch_size must be >= 1");
       }},
      {"lr", [](RunConfig& c, std::string_view v) { c.train.adamw.lr = to_double(v); }},
      {"weight_decay", [](RunConfig& c, std::string_view v) { c.train.adamw.weight_decay = to_double(v); }},
      {"beta1", [](RunConfig& c, std::string_view v) { c.train.adamw.beta1 = to_double(v); }},
      {"beta2", [](RunConfig& c, std::string_view v) { c.train.adamw.beta2 = to_double(v); }},
      {"adam_eps", [](RunConfig& c, std::string_view v) { c.train.adamw.eps = to_double(v); }},
      {"precision", [](RunConfig& c, std::string_view v) {
         if (v == "float64") c.precision = Precision::kFloat64;
         else if (v == "float32") c.precision = Precision::kFloat32;
         else throw ConfigError("precision must be float64 or float32");
       }},
      {"data_source", [](RunConfig& c, std::string_view v) {
         if (v == "files") c.data_source = DataSource::kFiles;
         else if (v == "synthetic") c.data_source = DataSource::kSynthetic;
         else throw ConfigError("data_source must be files or synthetic");
       }},
      {"synth_train_per_class", [](RunConfig& c, std::string_view v) { c.synth.train_per_class = to_size(v); }},
      {"synth_test_per_class", [](RunConfig& c, std::string_view v) { c.synth.test_per_class = to_size(v); }},
      {"synth_difficulty", [](RunConfig& c, std::string_view v) {
         c.synth.difficulty = to_double(v);
         if (!(c.synth.difficulty > 0.0 && c.synth.difficulty <= 1.0)) {
           throw ConfigError("synth_difficulty must lie in (0, 1]");
         }
       }},
      {"synth_seed", [](RunConfig& c, std::string_view v) { c.synth.seed = to_unsigned(v); }},
      {"synth_min_frames", [](RunConfig& c, std::string_view v) { c.synth.min_frames = to_size(v); }},
      {"synth_max_frames", [](RunConfig& c, std::string_view v) { c.synth.max_frames = to_size(v); }},
  };

  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(where + "unknown key '" + std::string(key) + "'");
    if (lines.count(key)) throw ConfigError(where + "duplicate key '" + std::string(key) + "'");
    lines.emplace(std::string(key), line_no);
    if (value.empty()) throw ConfigError(where + "missing value for '" + std::string(key) + "'");
    try {
      it->second(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + std::string(key) + ": " + e.what());
    }
  }

  if (pending.preset) {
    StageLayout stages = preset_stages(*pending.preset);
    cfg.model.stage_factors = std::move(stages.factors);
    cfg.model.stage_depths = std::move(stages.depths);
  }
  if (pending.factors) cfg.model.stage_factors = *pending.factors;
  if (pending.depths) cfg.model.stage_depths = *pending.depths;

  try {
    validate(cfg.model);
    if (cfg.synth.min_frames == 0 || cfg.synth.min_frames > cfg.synth.max_frames) {
      throw ConfigError("synth_min_frames: must be in [1, synth_max_frames]");
    }
  } catch (const ConfigError& e) {
    // Point at the line that set the offending field when there is one.
    const std::string message = e.what();
    const std::string field = message.substr(0, message.find(':'));
    std::string where = source + ": ";
    if (auto it = lines.find(field); it != lines.end()) {
      where = source + ":" + std::to_string(it->second) + ": ";
    } else if (field.starts_with("stage_") && lines.count("preset")) {
      where = source + ":" + std::to_string(lines.at("preset")) + ": ";
    }
    throw ConfigError(where + message);
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::string text;
  try {
    text = detail::read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_run_config(text, path);
}

void override_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.model.seed = seed;
  cfg.train.seed = seed;
  cfg.synth.seed = seed;
}

SynthOptions synth_options(const RunConfig& cfg, Split split) {
  SynthOptions o;
  o.split = split;
  o.difficulty = cfg.synth.difficulty;
  o.channels = cfg.model.input_dim;
  o.min_frames = cfg.synth.min_frames;
  o.max_frames = cfg.synth.max_frames;
  o.frame_cap = cfg.model.seq_len;
  if (split == Split::kTrain) {
    o.n_per_class = cfg.synth.train_per_class;
    o.seed = cfg.synth.seed;
    o.id_prefix = "train";
  } else {
    o.n_per_class = cfg.synth.test_per_class;
    o.seed = mix64(cfg.synth.seed ^ 0x7465737453504C54ULL);  // "testSPLT"
    o.id_prefix = "test";
  }
  return o;
}

}  // namespace hafformer
