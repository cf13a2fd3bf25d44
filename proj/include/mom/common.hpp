// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

// Everything that depends on the scalar type lives in an inline namespace
// named after the precision, so the 32-bit and 64-bit builds of the core
// library can be linked into one program.
#ifdef MOM_REAL_DOUBLE
#define MOM_PRECISION_NS f64
#else
#define MOM_PRECISION_NS f32
#endif
#define MOM_NS_BEGIN \
  namespace mom {    \
  inline namespace MOM_PRECISION_NS {
#define MOM_NS_END \
  }                \
  }

namespace mom {

#ifdef MOM_REAL_DOUBLE
namespace f32 {}
inline namespace f64 {
using real = double;
}
#else
inline namespace f32 {
using real = float;
}
namespace f64 {}
#endif

/// Error families. Each maps to a distinct process exit code in the CLI.
enum class ErrorKind : int {
  Dimension = 2,
  Numeric = 3,
  Format = 4,
  Config = 5,
  Protocol = 6,
  Pool = 7,
  Check = 8,
  Sampling = 9,
  Label = 10,
  Schedule = 11,
  Io = 12,
  Empty = 13,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

// Minimal leveled logging to stderr. Warnings are also counted so tests can
// observe that a degenerate-input path was taken.
enum class LogLevel { Debug, Info, Warn, Error, Off };

void set_log_level(LogLevel level);
LogLevel log_level();
void log_info(const std::string& msg);
void log_warn(const std::string& msg);
std::uint64_t warning_count();

}  // namespace mom
