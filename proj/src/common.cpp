// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#include "mom/common.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace mom {

namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::Info)};
std::atomic<std::uint64_t> g_warnings{0};
std::mutex g_log_mutex;

void emit(const char* tag, const std::string& msg) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
}
}  // namespace

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Format: return "format";
    case ErrorKind::Config: return "config";
    case ErrorKind::Protocol: return "protocol";
    case ErrorKind::Pool: return "pool";
    case ErrorKind::Check: return "check";
    case ErrorKind::Sampling: return "sampling";
    case ErrorKind::Label: return "label";
    case ErrorKind::Schedule: return "schedule";
    case ErrorKind::Io: return "io";
    case ErrorKind::Empty: return "empty";
  }
  return "unknown";
}

void set_log_level(LogLevel level) { g_level = static_cast<int>(level); }
LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void log_info(const std::string& msg) {
  if (g_level.load() <= static_cast<int>(LogLevel::Info)) emit("info", msg);
}

void log_warn(const std::string& msg) {
  ++g_warnings;
  if (g_level.load() <= static_cast<int>(LogLevel::Warn)) emit("warn", msg);
}

std::uint64_t warning_count() { return g_warnings.load(); }

}  // namespace mom
