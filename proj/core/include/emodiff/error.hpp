// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace emodiff {

// Base of every error thrown by the library. The CLI maps ConfigError,
// ValidationError, FormatError and ShapeError to exit code 1 and
// NumericalError to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Raised when a loss or parameter turns non-finite during training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

[[noreturn]] void throw_shape(const std::string& what, long expected_rows, long expected_cols,
                              long rows, long cols);

}  // namespace emodiff
