#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wmaudit {

enum class ErrorKind {
  invalid_input,
  degenerate_input,
  empty_kb,
  conflict,
  validation,
  parse,
  invalid_index,
  invalid_config,
  backend,
  connectivity,
  judge_format,
  io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::degenerate_input: return "degenerate-input";
    case ErrorKind::empty_kb: return "empty-kb";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::validation: return "validation";
    case ErrorKind::parse: return "parse";
    case ErrorKind::invalid_index: return "invalid-index";
    case ErrorKind::invalid_config: return "invalid-config";
    case ErrorKind::backend: return "backend";
    case ErrorKind::connectivity: return "connectivity";
    case ErrorKind::judge_format: return "judge-format";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

// All toolkit failures surface as this one exception type; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, bool retryable = false)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        retryable_(retryable) {}

  ErrorKind kind() const noexcept { return kind_; }
  bool retryable() const noexcept { return retryable_; }

 private:
  ErrorKind kind_;
  bool retryable_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace wmaudit
