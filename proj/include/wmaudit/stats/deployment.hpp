#pragma once

#include <string>
#include <string_view>

#include "wmaudit/error.hpp"
#include "wmaudit/stats/reference.hpp"
#include "wmaudit/stats/welch.hpp"

namespace wmaudit::stats {

enum class Decision { clean, uses_watermarked_data, inconclusive };

inline std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::clean: return "clean";
    case Decision::uses_watermarked_data: return "uses-watermarked-data";
    case Decision::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

inline Decision parse_decision(std::string_view s) {
  if (s == "clean") return Decision::clean;
  if (s == "uses-watermarked-data") return Decision::uses_watermarked_data;
  if (s == "inconclusive") return Decision::inconclusive;
  fail(ErrorKind::parse, "unknown decision '" + std::string(s) + "'");
}

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) {
    fail(ErrorKind::invalid_config, "alpha must lie in (0, 0.5), got " + std::to_string(alpha));
  }
}

struct DeploymentResult {
  Decision decision = Decision::inconclusive;
  WelchResult vs_clean;  // suspect against the clean reference
  WelchResult vs_watermarked;
  double p_clean = 1.0;        // p for H0: suspect mean below the clean mean
  double p_watermarked = 1.0;  // p for H0: suspect mean above the watermarked mean
  double log_p_clean = 0.0;
  double log_p_watermarked = 0.0;
  bool reject_clean_null = false;
  bool reject_watermarked_null = false;
  double alpha = 0.0;
};

/// Two one-sided Welch tests against the reference pair.
///   reject "below clean" only        -> uses-watermarked-data
///   reject "above watermarked" only  -> clean
///   neither or both                  -> inconclusive
inline DeploymentResult deployment_test(const SummaryStats& suspect, const ReferencePair& refs, double alpha,
                                        WatermarkMethod suspect_method) {
  check_alpha(alpha);
  if (refs.method != suspect_method || refs.clean.method != suspect_method ||
      refs.watermarked.method != suspect_method) {
    fail(ErrorKind::invalid_config, "reference distributions are for '" + std::string(to_string(refs.method)) +
                                        "' but the suspect was audited with '" +
                                        std::string(to_string(suspect_method)) + "'");
  }
  DeploymentResult r;
  r.alpha = alpha;
  r.vs_clean = welch_test(suspect, refs.clean.as_summary());
  r.vs_watermarked = welch_test(suspect, refs.watermarked.as_summary());
  r.p_clean = r.vs_clean.p_one_sided;
  r.log_p_clean = r.vs_clean.log_p_one_sided;
  // Lower tail: P(T <= t) = 1 - P(T >= t), evaluated on the mirrored statistic.
  if (r.vs_watermarked.degenerate) {
    r.p_watermarked = suspect.mean < refs.watermarked.mean ? 0.0 : (suspect.mean == refs.watermarked.mean ? 0.5 : 1.0);
    r.log_p_watermarked = std::log(r.p_watermarked);
  } else {
    r.p_watermarked = t_tail(-r.vs_watermarked.t, r.vs_watermarked.df);
    r.log_p_watermarked = log_t_tail(-r.vs_watermarked.t, r.vs_watermarked.df);
  }
  r.reject_clean_null = r.p_clean < alpha;
  r.reject_watermarked_null = r.p_watermarked < alpha;
  if (r.reject_clean_null && !r.reject_watermarked_null) r.decision = Decision::uses_watermarked_data;
  else if (!r.reject_clean_null && r.reject_watermarked_null) r.decision = Decision::clean;
  else r.decision = Decision::inconclusive;
  return r;
}

}  // namespace wmaudit::stats
