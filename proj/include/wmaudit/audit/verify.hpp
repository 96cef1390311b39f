#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmaudit/audit/config.hpp"
#include "wmaudit/stats/deployment.hpp"
#include "wmaudit/stats/summary.hpp"
#include "wmaudit/stats/welch.hpp"
#include "wmaudit/verify/metrics.hpp"
#include "wmaudit/verify/trial_log.hpp"

namespace wmaudit::audit {

/// Per-cell eval bits for one repetition (or all, when repetition < 0). Cells
/// with no record count as 0, matching the VSR denominator.
inline std::vector<double> eval_bits(const TrialLog& log, int repetition = -1) {
  std::vector<double> bits;
  std::size_t expected = log.header.grid_cells * (repetition < 0 ? log.header.repetitions : 1);
  for (const auto& t : log.trials) {
    if (repetition < 0 || t.repetition == repetition) bits.push_back(t.eval_bit != 0 ? 1.0 : 0.0);
  }
  if (bits.size() < expected) bits.resize(expected, 0.0);
  return bits;
}

inline nlohmann::json to_json(const stats::WelchResult& w) {
  return {{"t", w.t},
          {"df", w.df},
          {"p_one_sided", w.p_one_sided},
          {"p_two_sided", w.p_two_sided},
          {"log_p_one_sided", w.log_p_one_sided},
          {"log_p_two_sided", w.log_p_two_sided},
          {"degenerate", w.degenerate}};
}

inline nlohmann::json to_json(const stats::DeploymentResult& d) {
  return {{"alpha", d.alpha},
          {"decision", stats::to_string(d.decision)},
          {"p_clean", d.p_clean},
          {"p_watermarked", d.p_watermarked},
          {"log_p_clean", d.log_p_clean},
          {"log_p_watermarked", d.log_p_watermarked},
          {"reject_clean_null", d.reject_clean_null},
          {"reject_watermarked_null", d.reject_watermarked_null},
          {"vs_clean", to_json(d.vs_clean)},
          {"vs_watermarked", to_json(d.vs_watermarked)}};
}

inline nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

struct VerifyOutcome {
  stats::Decision decision = stats::Decision::inconclusive;
  nlohmann::json report;
};

/// Aggregates an evidence log and runs the configured tests. The primary
/// decision uses the first alpha; every alpha is reported.
inline VerifyOutcome verify_log(const TrialLog& log, const AuditConfig& cfg, const TrialLog* baseline = nullptr) {
  const TrialLogHeader& h = log.header;
  if (h.grid_cells == 0) fail(ErrorKind::invalid_input, "evidence log declares an empty grid");
  WatermarkMethod method = parse_method(h.method);
  if (cfg.method && *cfg.method != method) {
    fail(ErrorKind::invalid_config, "config method does not match the evidence log method '" + h.method + "'");
  }
  if (!cfg.reference && !baseline) {
    fail(ErrorKind::invalid_config, "verification needs reference distributions or a baseline log");
  }
  for (double a : cfg.alphas) stats::check_alpha(a);

  std::size_t total_cells = h.grid_cells * h.repetitions;
  AuditAggregate agg = aggregate(log.trials, total_cells, h.k);
  std::vector<double> bits = eval_bits(log);
  stats::SummaryStats suspect = stats::summarize(bits);

  nlohmann::json r;
  r["kind"] = "verify";
  r["config_fingerprint"] = h.config_fingerprint;
  r["grid"] = {{"method", h.method}, {"k", h.k}, {"n_wm", h.n_wm}, {"n_ds", h.n_ds},
               {"cells", h.grid_cells}, {"repetitions", h.repetitions}, {"seed", h.seed}};
  nlohmann::json per_spec = nlohmann::json::array();
  for (const auto& [id, b] : agg.per_spec) {
    per_spec.push_back({{"spec_id", id}, {"trials", b.trials}, {"successes", b.successes},
                        {"retrieved", b.retrieved}, {"errors", b.errors},
                        {"cgsr", optional_number(b.cgsr)}, {"mean_rank", optional_number(b.mean_rank)}});
  }
  r["aggregate"] = {{"trials", agg.n_trials}, {"missing", total_cells > agg.n_trials ? total_cells - agg.n_trials : 0},
                    {"successes", agg.successes}, {"retrieved", agg.retrieved}, {"errors", agg.errors},
                    {"vsr", agg.vsr}, {"cgsr", optional_number(agg.cgsr)},
                    {"mean_rank", optional_number(agg.mean_rank)}, {"per_spec", per_spec}};
  r["suspect"] = {{"mean", suspect.mean}, {"variance", suspect.variance}, {"n", suspect.n}};

  VerifyOutcome out;
  std::optional<double> baseline_p;
  if (baseline) {
    stats::SummaryStats base = stats::summarize(eval_bits(*baseline));
    stats::WelchResult w = stats::welch_test(suspect, base);
    baseline_p = w.p_one_sided;
    r["equality_test"] = to_json(w);
    r["equality_test"]["baseline"] = {{"mean", base.mean}, {"variance", base.variance}, {"n", base.n}};
  }

  nlohmann::json reps = nlohmann::json::array();
  std::vector<double> rep_vsr, rep_p;
  for (std::size_t rep = 0; rep < h.repetitions; ++rep) {
    std::vector<double> rb = eval_bits(log, static_cast<int>(rep));
    std::vector<TrialResult> rt;
    for (const auto& t : log.trials) {
      if (t.repetition == static_cast<int>(rep)) rt.push_back(t);
    }
    double vsr = compute_vsr(rt, h.grid_cells, 1);
    nlohmann::json row{{"repetition", rep}, {"vsr", vsr}};
    rep_vsr.push_back(vsr);
    if (cfg.reference && rb.size() >= 2) {
      auto d = stats::deployment_test(stats::summarize(rb), *cfg.reference, cfg.decision_alpha(), method);
      row["p_clean"] = d.p_clean;
      row["p_watermarked"] = d.p_watermarked;
      row["decision"] = stats::to_string(d.decision);
      rep_p.push_back(d.p_clean);
    }
    reps.push_back(row);
  }
  r["repetitions"] = reps;
  r["median_vsr"] = median(rep_vsr);
  if (!rep_p.empty()) r["median_p_clean"] = median(rep_p);

  if (cfg.reference) {
    nlohmann::json tests = nlohmann::json::array();
    for (double a : cfg.alphas) {
      stats::DeploymentResult d = stats::deployment_test(suspect, *cfg.reference, a, method);
      tests.push_back(to_json(d));
      if (a == cfg.decision_alpha()) out.decision = d.decision;
    }
    r["deployment"] = tests;
    r["reference"] = stats::to_json(*cfg.reference);
  } else {
    out.decision = *baseline_p < cfg.decision_alpha() ? stats::Decision::uses_watermarked_data
                                                      : stats::Decision::inconclusive;
  }
  r["decision_alpha"] = cfg.decision_alpha();
  r["decision"] = stats::to_string(out.decision);
  out.report = std::move(r);
  return out;
}

}  // namespace wmaudit::audit
