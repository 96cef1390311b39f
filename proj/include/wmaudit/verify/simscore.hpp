#pragma once

#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "wmaudit/backend/generation.hpp"
#include "wmaudit/corpus/prompts.hpp"
#include "wmaudit/error.hpp"

namespace wmaudit {

// The first integer token in the reply is the score; it must lie in [0, 100].
inline double parse_simscore(const std::string& reply) {
  static const std::regex integer(R"(-?\d+)");
  std::smatch m;
  if (!std::regex_search(reply, m, integer)) {
    fail(ErrorKind::judge_format, "judge reply has no integer score: '" + reply + "'");
  }
  long value = 0;
  try {
    value = std::stol(m.str());
  } catch (const std::exception&) {
    fail(ErrorKind::judge_format, "judge score out of range: '" + m.str() + "'");
  }
  if (value < 0 || value > 100) fail(ErrorKind::judge_format, "judge score " + m.str() + " outside [0, 100]");
  return static_cast<double>(value);
}

inline double simscore(GenerationBackend& judge, const std::string& clean_answer, const std::string& wm_answer,
                       const SamplingParams& sampling = {}) {
  GenerationRequest req;
  req.query_text = render_simscore_prompt(clean_answer, wm_answer);
  req.sampling = sampling;
  return parse_simscore(judge.generate(req));
}

struct SimScoreSummary {
  std::optional<double> mean;  // over scored pairs only
  std::size_t scored = 0;
  std::size_t unscored = 0;
};

/// Arithmetic mean over pairs; format failures are counted as unscored.
inline SimScoreSummary mean_simscore(GenerationBackend& judge,
                                     const std::vector<std::pair<std::string, std::string>>& pairs,
                                     const SamplingParams& sampling = {}) {
  SimScoreSummary s;
  double sum = 0.0;
  for (const auto& [clean, wm] : pairs) {
    try {
      sum += simscore(judge, clean, wm, sampling);
      ++s.scored;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::judge_format) throw;
      ++s.unscored;
    }
  }
  if (s.scored > 0) s.mean = sum / static_cast<double>(s.scored);
  return s;
}

}  // namespace wmaudit
