#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "wmaudit/corpus/watermark.hpp"
#include "wmaudit/verify/eval.hpp"

namespace wmaudit {

struct LintWarning {
  std::string spec_id;
  std::string message;
};

namespace detail {

// Everyday words that tend to show up in VLM answers. A signature that is a
// substring of one of these can match an unrelated answer.
inline constexpr std::string_view kCommonWords[] = {
    "pineapple", "apples",   "application", "banana",    "bananas",   "orange",    "grapefruit",
    "strawberry", "watermelon", "carrot",    "dogs",      "doghouse",  "category",  "cathedral",
    "education", "location", "information", "something", "everything", "anything", "another",
    "together",  "whatever", "however",   "understand", "important", "different", "question",
    "answer",    "picture",  "image",     "images",    "background", "foreground", "yesterday",
    "eyes",      "notice",   "nothing",   "know",      "known",     "unknown",   "cartoon",
    "there",     "their",    "theory",    "heart",     "earth",     "weather",   "father",
    "mother",    "brother",  "dragonfly", "snapdragon", "flamingos", "monkeys",  "parrot",
    "hatred",    "shatter",  "caterpillar", "scatter", "bathroom",  "toolkit",
};

}  // namespace detail

/// Signatures that are substrings of common words can fire on unrelated
/// answers under whitespace-stripped substring matching.
inline std::vector<LintWarning> lint_corpus(const std::vector<WatermarkSpec>& specs) {
  std::vector<LintWarning> out;
  for (const auto& s : specs) {
    std::string sig = normalize(s.signature);
    if (sig.empty()) continue;
    for (auto word : detail::kCommonWords) {
      if (word != sig && std::string_view(word).find(sig) != std::string_view::npos) {
        out.push_back({s.id, "signature '" + s.signature + "' is contained in the common word '" +
                                 std::string(word) + "'"});
        break;
      }
    }
    if (sig.size() < 4) {
      out.push_back({s.id, "signature '" + s.signature + "' is very short and prone to chance matches"});
    }
  }
  return out;
}

}  // namespace wmaudit
