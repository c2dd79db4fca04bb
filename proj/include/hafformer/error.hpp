// Copyright 2026 The HAFFormer Authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <stdexcept>
#include <string>

namespace hafformer {

// Root of every error the library throws. The CLI maps subclasses onto exit
// codes: ConfigError/FormatError/IoError -> 2, NumericError -> 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Non-finite values during evaluation or optimization.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Bad magic or unsupported version.
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

// Column count does not match the configured input width.
class DimensionError : public IoError {
 public:
  using IoError::IoError;
};

// Payload shorter than its header promises.
class CorruptionError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace hafformer
