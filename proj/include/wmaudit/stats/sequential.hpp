#pragma once

#include <concepts>
#include <cstddef>
#include <optional>
#include <vector>

#include "wmaudit/error.hpp"
#include "wmaudit/stats/deployment.hpp"
#include "wmaudit/stats/reference.hpp"
#include "wmaudit/stats/summary.hpp"
#include "wmaudit/stats/welch.hpp"

namespace wmaudit::stats {

struct PTracePoint {
  std::size_t queries = 0;
  double p = 1.0;
  double log_p = 0.0;
  double t = 0.0;
  double df = 0.0;
};

struct SequentialResult {
  Decision decision = Decision::inconclusive;
  std::size_t queries_used = 0;
  std::size_t failures = 0;
  std::vector<int> bits;
  std::vector<PTracePoint> p_trace;
};

/// A trial source yields the eval bit of the i-th probe, or nullopt when the
/// backend failed (recorded as 0, never aborting the audit).
template <class Source>
concept TrialSource = requires(Source s, std::size_t i) {
  { s(i) } -> std::convertible_to<std::optional<int>>;
};

/// Probes one query at a time and stops at the first one-sided
/// suspect-vs-clean p below alpha, or after max_queries.
template <TrialSource Source>
SequentialResult sequential_audit(Source&& next_trial, const ReferenceDistribution& clean_ref, double alpha,
                                  std::size_t max_queries) {
  check_alpha(alpha);
  if (max_queries < 2) fail(ErrorKind::invalid_input, "max_queries must be at least 2");
  SummaryStats clean = clean_ref.as_summary();

  SequentialResult out;
  RunningStats running;
  for (std::size_t i = 0; i < max_queries; ++i) {
    std::optional<int> bit = next_trial(i);
    int b = bit.value_or(0);
    if (!bit) ++out.failures;
    out.bits.push_back(b);
    running.push(static_cast<double>(b));
    out.queries_used = i + 1;
    if (running.count() < 2) continue;

    WelchResult w = welch_test(running.summary(), clean);
    out.p_trace.push_back({running.count(), w.p_one_sided, w.log_p_one_sided, w.t, w.df});
    if (w.p_one_sided < alpha) {
      out.decision = Decision::uses_watermarked_data;
      return out;
    }
  }
  return out;
}

}  // namespace wmaudit::stats
