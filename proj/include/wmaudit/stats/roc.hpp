#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "wmaudit/error.hpp"

namespace wmaudit::stats {

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

// FPR/TPR at each threshold: fraction of clean / watermarked rates >= threshold.
// Returned in ascending FPR order.
inline std::vector<RocPoint> roc_points(std::span<const double> clean_rates, std::span<const double> wm_rates,
                                        std::span<const double> thresholds) {
  if (clean_rates.empty() || wm_rates.empty() || thresholds.empty()) {
    fail(ErrorKind::invalid_input, "ROC inputs must be non-empty");
  }
  auto in_unit = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (!std::all_of(clean_rates.begin(), clean_rates.end(), in_unit) ||
      !std::all_of(wm_rates.begin(), wm_rates.end(), in_unit)) {
    fail(ErrorKind::invalid_input, "rates must lie in [0, 1]");
  }
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    fail(ErrorKind::invalid_input, "thresholds must be sorted ascending");
  }

  std::vector<double> clean(clean_rates.begin(), clean_rates.end());
  std::vector<double> wm(wm_rates.begin(), wm_rates.end());
  std::sort(clean.begin(), clean.end());
  std::sort(wm.begin(), wm.end());
  auto frac_at_least = [](const std::vector<double>& sorted, double tau) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), tau);
    return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
  };

  std::vector<RocPoint> out;
  out.reserve(thresholds.size());
  for (double tau : thresholds) out.push_back({tau, frac_at_least(clean, tau), frac_at_least(wm, tau)});
  // Ascending thresholds give descending rates; flip so FPR ascends.
  std::reverse(out.begin(), out.end());
  return out;
}

/// Highest TPR among points whose FPR does not exceed max_fpr (0 if none).
inline double tpr_at_fpr(std::span<const RocPoint> curve, double max_fpr) {
  double best = 0.0;
  for (const auto& p : curve) {
    if (p.fpr <= max_fpr) best = std::max(best, p.tpr);
  }
  return best;
}

}  // namespace wmaudit::stats
