// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#pragma once

#include <stdexcept>
#include <string>

namespace respnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract arguments (empty clips, shape mismatches).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Inconsistent configuration (bad hyperparameters, impossible geometry).
class InvalidConfig : public Error {
 public:
  using Error::Error;
};

/// On-disk format violations (bad magic, truncation, unsupported encoding).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Dataset content problems (unknown labels, annotations out of range).
class DataError : public Error {
 public:
  using Error::Error;
};

/// API misuse, e.g. running backward twice on one graph.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Training diverged (non-finite loss or gradient).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace respnet
