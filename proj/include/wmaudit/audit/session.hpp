#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <ctime>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "wmaudit/audit/config.hpp"
#include "wmaudit/backend/embedding.hpp"
#include "wmaudit/backend/generation.hpp"
#include "wmaudit/backend/remote_embedding.hpp"
#include "wmaudit/backend/remote_generation.hpp"
#include "wmaudit/corpus/corpus_io.hpp"
#include "wmaudit/kb/index_io.hpp"
#include "wmaudit/verify/eval.hpp"
#include "wmaudit/verify/metrics.hpp"
#include "wmaudit/verify/trial_log.hpp"

namespace wmaudit::audit {

/// Adds one cluster per watermark, reached from its probe triggers and from its
/// asset file name, so probes land next to the injected records.
inline MockGeometry route_corpus(MockGeometry g, const std::vector<WatermarkSpec>& specs, double dispersion) {
  std::set<std::string> taken;
  for (const auto& c : g.clusters) taken.insert(c.name);
  for (const auto& s : specs) {
    std::string name = "watermark/" + s.id;
    if (!taken.insert(name).second) continue;
    g.clusters.push_back(Cluster{name, CentroidSpec{}, dispersion});
    g.assignments.push_back({payload_key(Modality::image, s.asset_ref), name});
    for (const auto& p : s.probes) g.assignments.push_back({std::string(wmaudit::detail::trim_right(p.trigger)), name});
  }
  return g;
}

inline std::unique_ptr<EmbeddingBackend> make_embedder(const AuditConfig& cfg,
                                                       const std::vector<WatermarkSpec>& specs = {}) {
  if (cfg.embedder.kind == BackendKind::remote) return std::make_unique<RemoteEmbedder>(cfg.embedder.remote);
  MockGeometry g = cfg.embedder.geometry;
  if (cfg.seed) g.seed = util::mix_seed(*cfg.seed, util::fnv1a64(std::to_string(g.seed)));
  if (cfg.embedder.route_corpus_dispersion) g = route_corpus(std::move(g), specs, *cfg.embedder.route_corpus_dispersion);
  return std::make_unique<MockEmbedder>(std::move(g));
}

inline std::unique_ptr<GenerationBackend> make_generator(const GeneratorConfig& gen, std::optional<std::uint64_t> seed,
                                                         const KnowledgeBase& kb,
                                                         const std::vector<WatermarkSpec>& specs) {
  switch (gen.kind) {
    case BackendKind::remote:
      return std::make_unique<RemoteGenerator>(gen.remote);
    case BackendKind::lexical:
      return std::make_unique<LexicalJudge>();
    default: {
      if (!seed) fail(ErrorKind::invalid_config, "scripted generation requires a seed");
      ScriptedConfig sc{*seed, gen.rules, gen.default_response};
      return std::make_unique<ScriptedGenerator>(std::move(sc), build_catalog(kb, specs));
    }
  }
}

inline std::string utc_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

/// Everything a run needs, loaded once.
struct Session {
  AuditConfig cfg;
  KnowledgeBase kb{1};
  std::vector<WatermarkSpec> specs;
  WatermarkMethod method = WatermarkMethod::acronym;
  std::string fingerprint;
  std::unique_ptr<EmbeddingBackend> embedder;
  std::unique_ptr<GenerationBackend> generator;

  TrialLogHeader header() const {
    GridShape g = grid_shape(specs);
    TrialLogHeader h;
    h.method = std::string(to_string(method));
    h.k = cfg.k;
    h.n_wm = g.n_wm;
    h.n_ds = g.uniform ? g.n_ds : 0;
    h.grid_cells = g.cells;
    h.repetitions = cfg.repetitions;
    h.config_fingerprint = fingerprint;
    h.seed = cfg.seed.value_or(0);
    return h;
  }
};

inline WatermarkMethod corpus_method(const std::vector<WatermarkSpec>& specs, std::optional<WatermarkMethod> declared) {
  if (specs.empty()) fail(ErrorKind::invalid_input, "watermark corpus is empty");
  WatermarkMethod m = specs.front().method;
  for (const auto& s : specs) {
    if (s.method != m) fail(ErrorKind::invalid_config, "corpus mixes watermark methods; audit one method per run");
  }
  if (declared && *declared != m) {
    fail(ErrorKind::invalid_config, "config method '" + std::string(to_string(*declared)) +
                                        "' does not match the corpus method '" + std::string(to_string(m)) + "'");
  }
  return m;
}

/// Loads index and corpus, checks they agree, and builds the backends.
inline Session open_session(AuditConfig cfg) {
  cfg.validate();
  Session s;
  s.specs = load_corpus(cfg.corpus);
  s.method = corpus_method(s.specs, cfg.method);
  if (cfg.reference && cfg.reference->method != s.method) {
    fail(ErrorKind::invalid_config, "reference distributions are for '" + std::string(to_string(cfg.reference->method)) +
                                        "' but the corpus uses '" + std::string(to_string(s.method)) + "'");
  }
  s.kb = load_index(cfg.index);
  for (const auto& spec : s.specs) {
    bool present = false;
    for (const auto& r : s.kb.records()) present = present || (r.watermark_id && *r.watermark_id == spec.id);
    if (!present) fail(ErrorKind::validation, "watermark '" + spec.id + "' has no record in the index; run inject first");
  }
  s.fingerprint = config_fingerprint(cfg);
  s.embedder = make_embedder(cfg, s.specs);
  s.generator = make_generator(cfg.generator, cfg.seed, s.kb, s.specs);
  s.cfg = std::move(cfg);
  return s;
}

struct GridCell {
  std::size_t spec = 0;
  std::size_t probe = 0;
};

inline std::vector<GridCell> grid_cells(const std::vector<WatermarkSpec>& specs) {
  std::vector<GridCell> cells;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    for (std::size_t j = 0; j < specs[i].probes.size(); ++j) cells.push_back({i, j});
  }
  return cells;
}

inline std::vector<std::string> records_for(const KnowledgeBase& kb, const std::string& watermark_id) {
  std::vector<std::string> ids;
  for (const auto& r : kb.records()) {
    if (r.watermark_id && *r.watermark_id == watermark_id) ids.push_back(r.id);
  }
  return ids;
}

/// One probe through retrieval and generation. Backend failures are recorded
/// on the trial rather than thrown.
inline TrialResult run_trial(const Session& s, const GridCell& cell, int repetition, std::uint64_t trial_key) {
  const WatermarkSpec& spec = s.specs[cell.spec];
  const ProbeQuery& probe = spec.probes[cell.probe];
  TrialResult t;
  t.spec_id = spec.id;
  t.probe_index = static_cast<int>(cell.probe);
  t.repetition = repetition;
  try {
    EmbeddingVector q = s.embedder->embed_one(Modality::text, probe.full_text);
    RetrievalResult r = retrieve_top_k(s.kb, q, s.cfg.k, spec.id);
    t.retrieved_ids = r.ids();
    std::vector<std::string> targets = records_for(s.kb, spec.id);
    t.rank = rank_of_any(targets, r, s.cfg.k);

    GenerationRequest req;
    req.query_text = probe.full_text;
    req.sampling = s.cfg.sampling;
    req.trial_key = trial_key;
    for (const auto& e : r.entries) req.image_refs.push_back(s.kb.find(e.id)->asset_ref);
    t.output_text = s.generator->generate(req);
    t.eval_bit = eval_match(t.output_text, spec.signature) ? 1 : 0;
  } catch (const Error& e) {
    t.error = e.what();
    t.eval_bit = 0;
  }
  t.timestamp = utc_timestamp();
  return t;
}

/// Runs every (repetition, spec, probe) cell. Records reach the log in grid
/// order whatever the worker count, so logs from equal seeds are identical
/// apart from timestamps.
inline TrialLog run_probe_grid(const Session& s, const std::filesystem::path& log_path) {
  std::vector<GridCell> cells = grid_cells(s.specs);
  std::size_t total = cells.size() * s.cfg.repetitions;
  std::filesystem::create_directories(log_path.parent_path().empty() ? "." : log_path.parent_path());
  TrialLogWriter writer(log_path, s.header());

  std::vector<std::optional<TrialResult>> done(total);
  std::size_t next_to_write = 0;
  std::mutex mu;
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      TrialResult t = run_trial(s, cells[i % cells.size()], static_cast<int>(i / cells.size()), i);
      std::lock_guard lock(mu);
      done[i] = std::move(t);
      while (next_to_write < total && done[next_to_write]) writer.append(*done[next_to_write++]);
    }
  };
  std::size_t n_workers = std::min(s.cfg.workers, std::max<std::size_t>(total, 1));
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work);
  }

  TrialLog log;
  log.header = s.header();
  for (auto& t : done) log.trials.push_back(std::move(*t));
  return log;
}

}  // namespace wmaudit::audit
