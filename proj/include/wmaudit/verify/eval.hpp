#pragma once

#include <string>
#include <string_view>

#include "wmaudit/error.hpp"

namespace wmaudit {

// ASCII case folding; every whitespace byte is dropped, not just the ends.
// Non-ASCII bytes pass through unchanged.
inline std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case ' ': case '\t': case '\n': case '\v': case '\f': case '\r':
        continue;
      default:
        out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
    }
  }
  return out;
}

/// 1 iff the normalized signature occurs contiguously in the normalized output.
inline int eval_match(std::string_view output, std::string_view signature) {
  std::string sig = normalize(signature);
  if (sig.empty()) fail(ErrorKind::invalid_input, "signature is empty after normalization");
  return normalize(output).find(sig) != std::string::npos ? 1 : 0;
}

}  // namespace wmaudit
