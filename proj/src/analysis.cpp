// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#include "hafformer/analysis.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace hafformer {

namespace {

std::uint64_t norm_params(std::uint64_t d) { return 2 * d; }

std::string block_name(std::size_t s, std::size_t b) {
  return "stage" + std::to_string(s) + ".block" + std::to_string(b) + ".";
}

CostReport analyze(const ModelConfig& cfg) {
  validate(cfg);
  const std::uint64_t d = cfg.d_model;
  const std::uint64_t k = cfg.proj_kernel;
  CostReport report;

  report.entries.push_back({"projection", cfg.input_dim * d * k + d, cfg.seq_len * cfg.input_dim * d * k});

  std::uint64_t frames = cfg.seq_len;
  for (std::size_t s = 0; s < cfg.stage_factors.size(); ++s) {
    const std::uint64_t f = cfg.stage_factors[s];
    frames /= f;
    report.entries.push_back({"stage" + std::to_string(s) + ".merge", d * d * f + d, frames * d * d * f});
    for (std::size_t b = 0; b < cfg.stage_depths[s]; ++b) {
      const std::string prefix = block_name(s, b);
      report.entries.push_back({prefix + "token_norm", norm_params(d), 0});
      report.entries.push_back({prefix + "token_mixer", token_mixer_params(cfg.token_mixer, d),
                                token_mixer_macs(cfg.token_mixer, d, frames)});
      report.entries.push_back({prefix + "channel_norm", norm_params(d), 0});
      report.entries.push_back({prefix + "channel_mixer", channel_mixer_params(cfg.channel_mixer, d),
                                channel_mixer_macs(cfg.channel_mixer, d, frames)});
    }
  }
  report.entries.push_back({"final_norm", norm_params(d), 0});
  const std::uint64_t h = cfg.head_hidden;
  const std::uint64_t c = cfg.num_classes;
  report.entries.push_back({"head", d * h + h + h * c + c, d * h + h * c});

  for (const CostEntry& e : report.entries) {
    report.params_incl_projection += e.params;
    report.macs_incl_projection += e.macs;
    if (e.component != "projection") {
      report.params_excl_projection += e.params;
      report.macs_excl_projection += e.macs;
    }
  }

  if (cfg.token_mixer == TokenMixerKind::kMsdw) {
    report.notes.push_back(
        "msdw parameters use the two-branch depthwise closed form (" +
        std::to_string(token_mixer_params(TokenMixerKind::kMsdw, d)) +
        " per block); reference cost tables list 32 more per block at d_model=8 "
        "(~0.16K over five blocks), a residue no bias/norm convention reproduces. MACs are "
        "unaffected.");
  }
  return report;
}

std::string two_decimals(std::uint64_t count, std::uint64_t unit) {
  // Counts are non-negative, so adding half a step rounds half away from zero.
  const std::uint64_t step = unit / 100;
  const std::uint64_t hundredths = (count + step / 2) / step;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%llu.%02llu", static_cast<unsigned long long>(hundredths / 100),
                static_cast<unsigned long long>(hundredths % 100));
  return buf;
}

}  // namespace

std::uint64_t token_mixer_params(TokenMixerKind kind, std::uint64_t d) {
  switch (kind) {
    case TokenMixerKind::kSelfAttention: return 4 * (d * d + d);
    case TokenMixerKind::kIsc: return d * (kIscRatio * d) + kIscRatio * d * kDepthwiseKernel + (kIscRatio * d) * d;
    case TokenMixerKind::kDw: return d * kDepthwiseKernel;
    case TokenMixerKind::kMsdw: return d * kDepthwiseKernel + d;
    case TokenMixerKind::kPool:
    case TokenMixerKind::kIdentity: return 0;
  }
  return 0;
}

std::uint64_t channel_mixer_params(ChannelMixerKind kind, std::uint64_t d) {
  switch (kind) {
    case ChannelMixerKind::kFfn: {
      const std::uint64_t hidden = kFfnRatio * d;
      return (d * hidden + hidden) + (hidden * d + d);
    }
    case ChannelMixerKind::kGeglu: {
      const std::uint64_t hidden = kGegluRatio * d;
      return 2 * (d * hidden + hidden) + (hidden * d + d);
    }
    case ChannelMixerKind::kPool:
    case ChannelMixerKind::kIdentity: return 0;
  }
  return 0;
}

std::uint64_t token_mixer_macs(TokenMixerKind kind, std::uint64_t d, std::uint64_t frames) {
  switch (kind) {
    case TokenMixerKind::kSelfAttention:
      // Four d x d projections per frame, plus QKᵀ and A·V.
      return frames * 4 * d * d + 2 * frames * frames * d;
    case TokenMixerKind::kIsc:
      return frames * (d * kIscRatio * d + kIscRatio * d * kDepthwiseKernel + kIscRatio * d * d);
    case TokenMixerKind::kDw: return frames * d * kDepthwiseKernel;
    case TokenMixerKind::kMsdw: return frames * (d * kDepthwiseKernel + d);
    case TokenMixerKind::kPool:
    case TokenMixerKind::kIdentity: return 0;
  }
  return 0;
}

std::uint64_t channel_mixer_macs(ChannelMixerKind kind, std::uint64_t d, std::uint64_t frames) {
  switch (kind) {
    case ChannelMixerKind::kFfn: return frames * 2 * d * (kFfnRatio * d);
    case ChannelMixerKind::kGeglu: return frames * 3 * d * (kGegluRatio * d);
    case ChannelMixerKind::kPool:
    case ChannelMixerKind::kIdentity: return 0;
  }
  return 0;
}

CostReport count_params(const ModelConfig& cfg) { return analyze(cfg); }
CostReport count_macs(const ModelConfig& cfg) { return analyze(cfg); }

std::vector<MixerPair> all_mixer_pairs() {
  std::vector<MixerPair> out;
  for (TokenMixerKind tk : kAllTokenMixers)
    for (ChannelMixerKind ck : kAllChannelMixers) out.emplace_back(tk, ck);
  return out;
}

std::vector<CostRow> cost_table(const ModelConfig& base, std::span<const MixerPair> pairs) {
  std::vector<CostRow> rows;
  rows.reserve(pairs.size());
  for (const auto& [tk, ck] : pairs) {
    ModelConfig cfg = base;
    cfg.token_mixer = tk;
    cfg.channel_mixer = ck;
    const CostReport r = analyze(cfg);
    rows.push_back({tk, ck, r.params_excl_projection, r.macs_excl_projection,
                    r.params_incl_projection, r.macs_incl_projection});
  }
  return rows;
}

std::string format_kilo(std::uint64_t count) { return two_decimals(count, 1000); }
std::string format_mega(std::uint64_t count) { return two_decimals(count, 1000000); }

std::string format_cost_table(std::span<const CostRow> rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %-13s %10s %10s %15s %13s\n", "token_mixer",
                "channel_mixer", "params [K]", "MACs [M]", "params+proj [K]", "MACs+proj [M]");
  out << line;
  for (const CostRow& r : rows) {
    std::snprintf(line, sizeof line, "%-16s %-13s %10s %10s %15s %13s\n",
                  std::string(to_string(r.token_mixer)).c_str(),
                  std::string(to_string(r.channel_mixer)).c_str(), format_kilo(r.params).c_str(),
                  format_mega(r.macs).c_str(), format_kilo(r.params_incl_projection).c_str(),
                  format_mega(r.macs_incl_projection).c_str());
    out << line;
  }
  return out.str();
}

std::string format_cost_report(const ModelConfig& cfg, const CostReport& report) {
  std::ostringstream out;
  out << "token_mixer: " << to_string(cfg.token_mixer)
      << "  channel_mixer: " << to_string(cfg.channel_mixer) << "  d_model: " << cfg.d_model
      << "  seq_len: " << cfg.seq_len << "\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-34s %12s %14s\n", "component", "params", "MACs");
  out << line;
  for (const CostEntry& e : report.entries) {
    std::snprintf(line, sizeof line, "%-34s %12llu %14llu\n", e.component.c_str(),
                  static_cast<unsigned long long>(e.params), static_cast<unsigned long long>(e.macs));
    out << line;
  }
  out << "total excl. projection: " << format_kilo(report.params_excl_projection) << "K params, "
      << format_mega(report.macs_excl_projection) << "M MACs\n";
  out << "total incl. projection: " << format_kilo(report.params_incl_projection) << "K params, "
      << format_mega(report.macs_incl_projection) << "M MACs\n";
  for (const std::string& note : report.notes) out << "warning: " << note << "\n";
  return out.str();
}

std::string cost_table_json(std::span<const CostRow> rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const CostRow& r : rows) {
    arr.push_back({{"token_mixer", std::string(to_string(r.token_mixer))},
                   {"channel_mixer", std::string(to_string(r.channel_mixer))},
                   {"params", r.params},
                   {"macs", r.macs},
                   {"params_incl_projection", r.params_incl_projection},
                   {"macs_incl_projection", r.macs_incl_projection}});
  }
  return arr.dump(2) + "\n";
}

}  // namespace hafformer
