#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "wmaudit/error.hpp"

namespace wmaudit::stats {

/// Mean, unbiased sample variance (divide by n - 1) and count.
struct SummaryStats {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t n = 0;

  void validate() const {
    if (n < 2) fail(ErrorKind::invalid_input, "summary statistics need n >= 2, got " + std::to_string(n));
    if (!std::isfinite(mean) || !std::isfinite(variance)) {
      fail(ErrorKind::invalid_input, "summary statistics must be finite");
    }
    if (variance < 0.0) fail(ErrorKind::invalid_input, "variance must be non-negative");
  }

  friend bool operator==(const SummaryStats&, const SummaryStats&) = default;
};

inline SummaryStats summarize(std::span<const double> xs) {
  if (xs.size() < 2) fail(ErrorKind::invalid_input, "need at least two samples");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, ss / static_cast<double>(xs.size() - 1), xs.size()};
}

// Welford's online mean/variance.
class RunningStats {
 public:
  void push(double x) {
    ++n_;
    double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
#ifndef NDEBUG
    history_.push_back(x);
    if (n_ >= 2) {
      SummaryStats batch = summarize(history_);
      assert(std::fabs(batch.mean - mean_) <= 1e-9 * (1.0 + std::fabs(batch.mean)));
      assert(std::fabs(batch.variance - variance()) <= 1e-9 * (1.0 + batch.variance));
    }
#endif
  }

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept {
    if (n_ < 2) return 0.0;
    double v = m2_ / static_cast<double>(n_ - 1);
    return v < 0.0 ? 0.0 : v;
  }

  SummaryStats summary() const {
    SummaryStats s{mean_, variance(), n_};
    s.validate();
    return s;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
#ifndef NDEBUG
  std::vector<double> history_;
#endif
};

}  // namespace wmaudit::stats
