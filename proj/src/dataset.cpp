// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#include "hafformer/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "binary_io.hpp"
#include "hafformer/error.hpp"

namespace hafformer {

namespace {

constexpr std::string_view kMagic = "HAFE";

}  // namespace

void validate(const Dataset& dataset) {
  std::set<std::string, std::less<>> seen;
  for (const EmbeddingRecord& r : dataset.records) {
    if (r.id.empty()) throw ArgumentError("dataset: record with empty id");
    if (!seen.insert(r.id).second) throw ArgumentError("dataset: duplicate id '" + r.id + "'");
    if (r.features.rows() == 0) throw ArgumentError("dataset: record '" + r.id + "' has no frames");
    if (r.label && (*r.label < 0 || *r.label > 1)) {
      throw ArgumentError("dataset: record '" + r.id + "' has label outside {0, 1}");
    }
    if (dataset.split == Split::kTrain && !r.label) {
      throw ArgumentError("dataset: train record '" + r.id + "' is unlabeled");
    }
  }
}

std::string encode_embedding(const EmbeddingRecord& record) {
  if (record.id.empty() || record.id.size() > UINT16_MAX) {
    throw ArgumentError("embedding: id must be 1..65535 bytes");
  }
  const FrameMatrix& x = record.features;
  if (x.rows() == 0 || x.rows() > UINT32_MAX || x.cols() > UINT32_MAX) {
    throw ArgumentError("embedding '" + record.id + "': unsupported shape " + x.shape_string());
  }
  detail::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kEmbeddingVersion);
  w.u32(static_cast<std::uint32_t>(x.rows()));
  w.u32(static_cast<std::uint32_t>(x.cols()));
  w.u16(static_cast<std::uint16_t>(record.id.size()));
  w.bytes(record.id);
  for (double v : x.values()) w.f32(static_cast<float>(v));
  return w.take();
}

EmbeddingRecord decode_embedding(const std::string& bytes, const std::string& source,
                                 std::size_t expected_cols) {
  detail::ByteReader r(bytes, source);
  if (bytes.size() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
    throw FormatError(source + ": bad magic, not an embedding file");
  }
  const std::uint32_t version = r.u32();
  if (version != kEmbeddingVersion) {
    throw FormatError(source + ": unsupported embedding version " + std::to_string(version));
  }
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  if (cols != expected_cols) {
    throw DimensionError(source + ": " + std::to_string(cols) + " channels, expected " +
                         std::to_string(expected_cols));
  }
  if (rows == 0) throw FormatError(source + ": embedding has no frames");
  const std::uint16_t id_len = r.u16();
  EmbeddingRecord record;
  record.id = std::string(r.bytes(id_len));
  if (record.id.empty()) throw FormatError(source + ": empty record id");
  const std::uint64_t payload = static_cast<std::uint64_t>(rows) * cols * 4;
  if (payload != r.remaining()) {
    if (payload > r.remaining()) {
      throw CorruptionError(source + ": truncated payload (" + std::to_string(r.remaining()) +
                            " of " + std::to_string(payload) + " bytes)");
    }
    throw CorruptionError(source + ": trailing bytes after payload");
  }
  record.features = FrameMatrix(rows, cols);
  for (double& v : record.features.values()) {
    v = static_cast<double>(r.f32());
    if (!std::isfinite(v)) throw FormatError(source + ": non-finite feature value");
  }
  return record;
}

void save_embedding(const std::string& path, const EmbeddingRecord& record) {
  detail::write_file(path, encode_embedding(record));
}

EmbeddingRecord load_embedding(const std::string& path, std::size_t expected_cols) {
  return decode_embedding(detail::read_file(path), path, expected_cols);
}

FrameMatrix pad_or_truncate(const FrameMatrix& x, std::size_t target_rows) {
  if (target_rows == 0) throw ArgumentError("pad_or_truncate: target must be >= 1");
  if (x.rows() == target_rows) return x;
  FrameMatrix out(target_rows, x.cols());
  const std::size_t keep = std::min(target_rows, x.rows());
  std::copy_n(x.data(), keep * x.cols(), out.data());
  return out;
}

std::vector<std::pair<std::string, int>> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open manifest");
  std::vector<std::pair<std::string, int>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    const std::string where = path + ":" + std::to_string(line_no);
    if (comma == std::string::npos || comma == 0) throw FormatError(where + ": expected 'id,label'");
    const std::string label = line.substr(comma + 1);
    if (label != "0" && label != "1") throw FormatError(where + ": label must be 0 or 1");
    rows.emplace_back(line.substr(0, comma), label == "1" ? 1 : 0);
  }
  return rows;
}

void write_manifest(const std::string& path, const std::vector<std::pair<std::string, int>>& rows) {
  std::string text;
  for (const auto& [id, label] : rows) text += id + "," + std::to_string(label) + "\n";
  detail::write_file(path, text);
}

Dataset load_dataset_dir(const std::string& dir, Split split, std::size_t expected_cols) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  const fs::path manifest = root / kManifestName;
  if (!fs::exists(manifest)) throw IoError(manifest.string() + ": manifest not found");
  Dataset dataset;
  dataset.split = split;
  for (const auto& [id, label] : read_manifest(manifest.string())) {
    EmbeddingRecord record = load_embedding((root / (id + kEmbeddingExtension)).string(), expected_cols);
    if (record.id != id) {
      throw FormatError(dir + ": file for '" + id + "' carries id '" + record.id + "'");
    }
    record.label = label;
    dataset.records.push_back(std::move(record));
  }
  validate(dataset);
  return dataset;
}

void save_dataset_dir(const std::string& dir, const Dataset& dataset) {
  namespace fs = std::filesystem;
  validate(dataset);
  fs::create_directories(dir);
  std::vector<std::pair<std::string, int>> rows;
  for (const EmbeddingRecord& r : dataset.records) {
    if (!r.label) throw ArgumentError("save_dataset_dir: record '" + r.id + "' is unlabeled");
    save_embedding((fs::path(dir) / (r.id + kEmbeddingExtension)).string(), r);
    rows.emplace_back(r.id, *r.label);
  }
  write_manifest((fs::path(dir) / kManifestName).string(), rows);
}

}  // namespace hafformer
