#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "wmaudit/stats/incomplete_beta.hpp"
#include "wmaudit/stats/summary.hpp"

namespace wmaudit::stats {

/// Welch's unequal-variance t-test of a against b.
/// p_one_sided is P(T >= t): small when a's mean exceeds b's.
struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_one_sided = 0.5;
  double p_two_sided = 1.0;
  double log_p_one_sided = 0.0;  // ln of p_one_sided; finite where p underflows
  double log_p_two_sided = 0.0;
  bool degenerate = false;  // both variances were zero
};

inline double welch_satterthwaite_df(const SummaryStats& a, const SummaryStats& b) {
  double va = a.variance / static_cast<double>(a.n);
  double vb = b.variance / static_cast<double>(b.n);
  double num = (va + vb) * (va + vb);
  double den = va * va / static_cast<double>(a.n - 1) + vb * vb / static_cast<double>(b.n - 1);
  return num / den;
}

inline WelchResult welch_test(const SummaryStats& a, const SummaryStats& b) {
  a.validate();
  b.validate();
  WelchResult r;
  double se2 = a.variance / static_cast<double>(a.n) + b.variance / static_cast<double>(b.n);
  if (se2 == 0.0) {
    r.degenerate = true;
    r.df = static_cast<double>(a.n + b.n - 2);
    if (a.mean == b.mean) {
      r.log_p_one_sided = std::log(0.5);
      return r;
    }
    bool above = a.mean > b.mean;
    r.t = above ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.p_one_sided = above ? 0.0 : 1.0;
    r.p_two_sided = 0.0;
    r.log_p_one_sided = above ? -std::numeric_limits<double>::infinity() : 0.0;
    r.log_p_two_sided = -std::numeric_limits<double>::infinity();
    return r;
  }

  r.t = (a.mean - b.mean) / std::sqrt(se2);
  r.df = welch_satterthwaite_df(a, b);
  r.p_one_sided = t_tail(r.t, r.df);
  r.log_p_one_sided = log_t_tail(r.t, r.df);
  // Two-sided p doubles the smaller tail, which is the tail at |t|.
  double log_small = log_t_tail(std::fabs(r.t), r.df);
  r.p_two_sided = std::min(1.0, 2.0 * std::exp(log_small));
  r.log_p_two_sided = std::min(0.0, std::log(2.0) + log_small);
  return r;
}

}  // namespace wmaudit::stats
