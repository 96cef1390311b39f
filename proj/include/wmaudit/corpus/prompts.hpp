#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wmaudit/error.hpp"

namespace wmaudit {

// Line breaks (and the trailing space before them) are part of the templates.
inline constexpr std::string_view kAcronymPromptTemplate =
    "Here is an example:\n"
    "(UGP, Unicorn Grammar Parser)\n"
    "Please create {num_of_watermark} pairs of uncommon acronyms and their \n"
    "full names based on this example.";

inline constexpr std::string_view kSimScorePromptTemplate =
    "Determine the semantic similarity between the following two strings and \n"
    "give your score on a scale of 0-100:\n"
    "String 1: {Clean_Answer}\n"
    "String 2: {Watermark_Answer}\n"
    "Just answer with numbers.";

/// Single left-to-right pass over `tmpl`: only the named placeholders are
/// replaced, and substituted text is never rescanned.
inline std::string substitute(std::string_view tmpl,
                              const std::vector<std::pair<std::string_view, std::string_view>>& fields) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool replaced = false;
    if (tmpl[i] == '{') {
      for (const auto& [name, value] : fields) {
        if (tmpl.substr(i, name.size() + 2) == std::string("{") + std::string(name) + "}") {
          out.append(value);
          i += name.size() + 2;
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out.push_back(tmpl[i++]);
  }
  return out;
}

inline std::string render_acronym_prompt(int n) {
  if (n < 1) fail(ErrorKind::invalid_input, "number of watermarks must be at least 1");
  std::string count = std::to_string(n);
  return substitute(kAcronymPromptTemplate, {{"num_of_watermark", count}});
}

inline std::string render_simscore_prompt(std::string_view clean_answer, std::string_view wm_answer) {
  if (clean_answer.empty() || wm_answer.empty()) {
    fail(ErrorKind::invalid_input, "both answers must be non-empty");
  }
  return substitute(kSimScorePromptTemplate,
                    {{"Clean_Answer", clean_answer}, {"Watermark_Answer", wm_answer}});
}

}  // namespace wmaudit
