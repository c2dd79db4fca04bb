// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hafformer/matrix.hpp"

namespace hafformer {

inline constexpr std::size_t kEmbeddingDim = 1024;
inline constexpr std::uint32_t kEmbeddingVersion = 1;
// Frame rate implied by 3200 frames covering 64 s; metadata only.
inline constexpr double kEmbeddingFrameRateHz = 50.0;

// One utterance-level embedding sequence. Labels: 0 healthy control, 1 AD.
struct EmbeddingRecord {
  std::string id;
  FrameMatrix features;  // L_raw x channels
  std::optional<int> label;
};

enum class Split { kTrain, kTest };

struct Dataset {
  std::vector<EmbeddingRecord> records;
  Split split = Split::kTrain;
};

// Throws ArgumentError on empty/duplicate ids, missing train labels or
// labels outside {0, 1}.
void validate(const Dataset& dataset);

// Embedding file, little-endian:
//   "HAFE" | version u32 | rows u32 | cols u32 | id_len u16 | UTF-8 id |
//   rows x cols f32, row-major
// Values are widened to double on load and narrowed to float on save.
std::string encode_embedding(const EmbeddingRecord& record);
EmbeddingRecord decode_embedding(const std::string& bytes, const std::string& source,
                                 std::size_t expected_cols = kEmbeddingDim);
void save_embedding(const std::string& path, const EmbeddingRecord& record);
// FormatError: bad magic/version; DimensionError: cols != expected_cols;
// CorruptionError: truncated or trailing payload.
EmbeddingRecord load_embedding(const std::string& path, std::size_t expected_cols = kEmbeddingDim);

// Keeps the first target rows, or appends zero rows up to target.
FrameMatrix pad_or_truncate(const FrameMatrix& x, std::size_t target_rows);

// Label manifest: one "id,label" per line, LF terminated.
std::vector<std::pair<std::string, int>> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<std::pair<std::string, int>>& rows);

inline constexpr const char* kManifestName = "manifest.csv";
inline constexpr const char* kEmbeddingExtension = ".hafe";

// Directory layout: manifest.csv plus <id>.hafe per record.
Dataset load_dataset_dir(const std::string& dir, Split split,
                         std::size_t expected_cols = kEmbeddingDim);
void save_dataset_dir(const std::string& dir, const Dataset& dataset);

}  // namespace hafformer
