// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <string_view>

namespace hafformer {

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// 64-bit FNV-1a; used to derive per-tensor streams from parameter names.
std::uint64_t fnv1a64(std::string_view text);

// Counter-based generator: draw i of stream (seed, stream) is a pure function
// of (seed, stream, i), so values do not depend on how many draws other
// consumers made. The sequential interface walks the counter.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t bits_at(std::uint64_t counter) const;
  double uniform_at(std::uint64_t counter) const;  // [0, 1)
  double normal_at(std::uint64_t counter) const;   // consumes bits 2c and 2c+1

  std::uint64_t next_bits() { return bits_at(counter_++); }
  double next_uniform() { return uniform_at(counter_++); }
  // Uniform integer in [0, n); n > 0.
  std::uint64_t next_below(std::uint64_t n);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace hafformer
