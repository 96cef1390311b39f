#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wmaudit/error.hpp"
#include "wmaudit/kb/knowledge_base.hpp"

namespace wmaudit {

/// One audited probe. `error` is set when a backend call failed; such trials
/// carry eval_bit 0 and never enter the CGSR denominator.
struct TrialResult {
  std::string spec_id;
  int probe_index = 0;
  int repetition = 0;
  std::vector<std::string> retrieved_ids;
  int rank = 0;
  std::string output_text;
  int eval_bit = 0;
  std::optional<std::string> error;
  std::string timestamp;

  bool ok() const noexcept { return !error.has_value(); }
  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

inline std::size_t count_successes(const std::vector<TrialResult>& trials) {
  std::size_t s = 0;
  for (const auto& t : trials) s += t.eval_bit == 1 ? 1 : 0;
  return s;
}

// Cells absent from `trials` count as failures.
inline double compute_vsr(const std::vector<TrialResult>& trials, std::size_t n_wm, std::size_t n_ds) {
  std::size_t cells = n_wm * n_ds;
  if (cells == 0) fail(ErrorKind::invalid_input, "VSR grid N_wm x N_ds must be non-empty");
  std::size_t successes = count_successes(trials);
  if (successes > cells) {
    fail(ErrorKind::invalid_input, std::to_string(successes) + " successes exceed the " +
                                       std::to_string(cells) + "-cell grid");
  }
  return static_cast<double>(successes) / static_cast<double>(cells);
}

/// Success rate over trials whose watermark was retrieved within depth k.
/// Empty when no trial retrieved its watermark.
inline std::optional<double> compute_cgsr(const std::vector<TrialResult>& trials, std::size_t k) {
  std::size_t hits = 0;
  std::size_t emitted = 0;
  for (const auto& t : trials) {
    if (!t.ok() || !retrieved(t.rank, k)) continue;
    ++hits;
    emitted += t.eval_bit == 1 ? 1 : 0;
  }
  if (hits == 0) return std::nullopt;
  return static_cast<double>(emitted) / static_cast<double>(hits);
}

inline std::optional<double> mean_rank(const std::vector<TrialResult>& trials) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& t : trials) {
    if (t.rank <= 0) continue;  // retrieval never happened
    sum += t.rank;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

struct SpecBreakdown {
  std::size_t trials = 0;
  std::size_t successes = 0;
  std::size_t retrieved = 0;
  std::size_t errors = 0;
  std::optional<double> cgsr;
  std::optional<double> mean_rank;
};

struct AuditAggregate {
  std::size_t n_trials = 0;
  std::size_t successes = 0;
  std::size_t retrieved = 0;
  std::size_t errors = 0;
  double vsr = 0.0;
  std::optional<double> cgsr;
  std::optional<double> mean_rank;
  std::map<std::string, SpecBreakdown> per_spec;
};

inline AuditAggregate aggregate(const std::vector<TrialResult>& trials, std::size_t grid_cells,
                                std::size_t k) {
  if (grid_cells == 0) fail(ErrorKind::invalid_input, "grid must have at least one cell");
  AuditAggregate a;
  a.n_trials = trials.size();
  a.successes = count_successes(trials);
  a.vsr = compute_vsr(trials, grid_cells, 1);
  a.cgsr = compute_cgsr(trials, k);
  a.mean_rank = mean_rank(trials);

  std::map<std::string, std::vector<TrialResult>> groups;
  for (const auto& t : trials) {
    groups[t.spec_id].push_back(t);
    if (!t.ok()) ++a.errors;
    else if (retrieved(t.rank, k)) ++a.retrieved;
  }
  for (auto& [id, g] : groups) {
    SpecBreakdown b;
    b.trials = g.size();
    b.successes = count_successes(g);
    for (const auto& t : g) {
      if (!t.ok()) ++b.errors;
      else if (retrieved(t.rank, k)) ++b.retrieved;
    }
    b.cgsr = compute_cgsr(g, k);
    b.mean_rank = mean_rank(g);
    a.per_spec.emplace(id, b);
  }
  return a;
}

}  // namespace wmaudit
