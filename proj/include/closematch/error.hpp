// Copyright 2026 The closematch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace closematch {

/// Broad failure class. The CLI maps these onto process exit codes.
enum class ErrorKind {
  Usage = 1,
  Data = 2,
  Numeric = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error data_error(const std::string& what) { return Error(ErrorKind::Data, what); }
inline Error usage_error(const std::string& what) { return Error(ErrorKind::Usage, what); }
inline Error numeric_error(const std::string& what) { return Error(ErrorKind::Numeric, what); }

}  // namespace closematch
