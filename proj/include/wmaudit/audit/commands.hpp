#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmaudit/audit/config.hpp"
#include "wmaudit/audit/session.hpp"
#include "wmaudit/audit/verify.hpp"
#include "wmaudit/kb/inject.hpp"
#include "wmaudit/stats/pca.hpp"
#include "wmaudit/stats/roc.hpp"
#include "wmaudit/stats/sequential.hpp"
#include "wmaudit/transforms/png_io.hpp"
#include "wmaudit/verify/simscore.hpp"

namespace wmaudit::audit {

inline void ensure_parent(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write '" + path.string() + "'");
  out << text;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, path.string() + ": " + e.what());
  }
}

inline std::vector<WatermarkSpec> optional_corpus(const AuditConfig& cfg) {
  if (cfg.corpus.empty() || !std::filesystem::exists(cfg.corpus)) return {};
  return load_corpus(cfg.corpus);
}

// index -------------------------------------------------------------------------

inline bool is_image_file(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".webp" || ext == ".bmp" || ext == ".gif";
}

/// Embeds every image in `assets_dir` (sorted by file name); the record id is
/// the file stem.
inline KnowledgeBase cmd_index(const AuditConfig& cfg, const std::filesystem::path& assets_dir) {
  cfg.validate();
  if (!std::filesystem::is_directory(assets_dir)) {
    fail(ErrorKind::io, "asset directory '" + assets_dir.string() + "' does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(assets_dir)) {
    if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  auto embedder = make_embedder(cfg, optional_corpus(cfg));

  EmbedRequest req{Modality::image, {}};
  for (const auto& f : files) req.inputs.push_back(f.string());
  std::vector<EmbeddingVector> vecs;
  if (!req.inputs.empty()) vecs = embedder->embed(req);

  std::size_t dim = vecs.empty() ? embedder->dim() : vecs.front().dim();
  if (dim == 0) fail(ErrorKind::invalid_config, "embedding dimension is unknown for an empty asset directory");
  KnowledgeBase kb(dim);
  for (std::size_t i = 0; i < files.size(); ++i) {
    kb.add(ImageRecord{files[i].stem().string(), files[i].string(), std::move(vecs[i]), std::nullopt});
  }
  ensure_parent(cfg.index);
  save_index(kb, cfg.index);
  return kb;
}

// inject ------------------------------------------------------------------------

inline KnowledgeBase cmd_inject(const AuditConfig& cfg, const std::filesystem::path& out_index) {
  cfg.validate();
  KnowledgeBase kb = load_index(cfg.index);
  std::vector<WatermarkSpec> specs = load_corpus(cfg.corpus);
  if (cfg.require_assets) {
    for (const auto& s : specs) {
      if (!std::filesystem::is_regular_file(s.asset_ref)) {
        fail(ErrorKind::validation, "watermark '" + s.id + "': asset '" + s.asset_ref + "' does not exist");
      }
    }
  }
  auto embedder = make_embedder(cfg, specs);
  KnowledgeBase out = inject_watermarks(kb, specs, *embedder);
  ensure_parent(out_index);
  save_index(out, out_index);
  return out;
}

// probe / verify ----------------------------------------------------------------

inline std::filesystem::path evidence_path(const AuditConfig& cfg) { return cfg.out / "evidence.jsonl"; }

inline TrialLog cmd_probe(const AuditConfig& cfg) {
  Session s = open_session(cfg);
  return run_probe_grid(s, evidence_path(s.cfg));
}

inline VerifyOutcome cmd_verify(const AuditConfig& cfg, const std::filesystem::path& log_path) {
  TrialLog log = load_trial_log(log_path);
  std::optional<TrialLog> baseline;
  if (cfg.baseline_log) baseline = load_trial_log(*cfg.baseline_log);
  VerifyOutcome v = verify_log(log, cfg, baseline ? &*baseline : nullptr);
  write_json(cfg.out / "report.json", v.report);
  return v;
}

// sequential --------------------------------------------------------------------

struct SequentialOutcome {
  stats::SequentialResult result;
  nlohmann::json report;
};

/// Queries cycle through the probe grid; the test against the clean reference
/// is recomputed after every answer and the run stops at p < alpha.
inline SequentialOutcome cmd_sequential(const AuditConfig& cfg) {
  if (!cfg.reference) fail(ErrorKind::invalid_config, "sequential audit needs reference distributions");
  Session s = open_session(cfg);
  std::vector<GridCell> cells = grid_cells(s.specs);
  std::filesystem::create_directories(s.cfg.out);
  TrialLogHeader header = s.header();
  TrialLogWriter writer(s.cfg.out / "sequential.jsonl", header);

  auto source = [&](std::size_t i) -> std::optional<int> {
    TrialResult t = run_trial(s, cells[i % cells.size()], static_cast<int>(i / cells.size()), i);
    writer.append(t);
    if (!t.ok()) return std::nullopt;
    return t.eval_bit;
  };
  SequentialOutcome out;
  out.result = stats::sequential_audit(source, s.cfg.reference->clean, s.cfg.decision_alpha(), s.cfg.max_queries);

  nlohmann::json trace = nlohmann::json::array();
  std::ostringstream csv;
  csv << "queries,p,log_p,t,df\n" << std::setprecision(17);
  for (const auto& pt : out.result.p_trace) {
    trace.push_back({{"queries", pt.queries}, {"p", pt.p}, {"log_p", pt.log_p}, {"t", pt.t}, {"df", pt.df}});
    csv << pt.queries << ',' << pt.p << ',' << pt.log_p << ',' << pt.t << ',' << pt.df << '\n';
  }
  write_text(s.cfg.out / "p_trace.csv", csv.str());

  auto& r = out.report;
  r["kind"] = "sequential";
  r["config_fingerprint"] = s.fingerprint;
  r["alpha"] = s.cfg.decision_alpha();
  r["max_queries"] = s.cfg.max_queries;
  r["decision"] = stats::to_string(out.result.decision);
  r["queries_used"] = out.result.queries_used;
  r["failures"] = out.result.failures;
  r["final_p"] = out.result.p_trace.empty() ? nlohmann::json(nullptr) : nlohmann::json(out.result.p_trace.back().p);
  r["bits"] = out.result.bits;
  r["p_trace"] = trace;
  write_json(s.cfg.out / "sequential_report.json", r);
  return out;
}

// harmlessness ------------------------------------------------------------------

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "'");
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!wmaudit::detail::blank(line)) out.push_back(std::string(wmaudit::detail::trim_right(line)));
  }
  return out;
}

inline KnowledgeBase without_watermarks(const KnowledgeBase& kb) {
  KnowledgeBase clean(kb.dim());
  for (const auto& r : kb.records()) {
    if (!r.watermark_id) clean.add(r);
  }
  return clean;
}

struct RelevantQuery {
  std::string query;
  std::string watermark_id;
};

inline std::vector<RelevantQuery> read_relevant_queries(const std::filesystem::path& path) {
  std::vector<RelevantQuery> out;
  for (const auto& line : read_lines(path)) {
    try {
      auto j = nlohmann::json::parse(line);
      out.push_back({j.at("query").get<std::string>(), j.at("watermark_id").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::parse, path.string() + ": " + e.what());
    }
  }
  return out;
}

/// Normal queries measure how often watermark records leak into ordinary
/// retrieval and, when they do, whether the generator emits a signature.
/// Relevant queries compare answers with and without the watermarks present.
inline nlohmann::json cmd_harmlessness(const AuditConfig& cfg, const std::filesystem::path& normal_queries,
                                       const std::optional<std::filesystem::path>& relevant_queries = std::nullopt) {
  Session s = open_session(cfg);
  std::map<std::string, const WatermarkSpec*> by_id;
  for (const auto& spec : s.specs) by_id[spec.id] = &spec;

  std::vector<std::string> queries = read_lines(normal_queries);
  std::size_t retrieved_any = 0, emitted = 0, errors = 0;
  nlohmann::json leaks = nlohmann::json::array();
  for (std::size_t i = 0; i < queries.size(); ++i) {
    try {
      RetrievalResult r = retrieve_top_k(s.kb, s.embedder->embed_one(Modality::text, queries[i]), s.cfg.k);
      std::vector<std::string> wm_ids;
      GenerationRequest req{queries[i], {}, s.cfg.sampling, i};
      for (const auto& e : r.entries) {
        const ImageRecord* rec = s.kb.find(e.id);
        req.image_refs.push_back(rec->asset_ref);
        if (rec->watermark_id) wm_ids.push_back(*rec->watermark_id);
      }
      if (wm_ids.empty()) continue;
      ++retrieved_any;
      std::string text = s.generator->generate(req);
      bool hit = false;
      for (const auto& id : wm_ids) hit = hit || eval_match(text, by_id.at(id)->signature);
      emitted += hit ? 1 : 0;
      leaks.push_back({{"query_index", i}, {"watermarks", wm_ids}, {"emitted", hit}});
    } catch (const Error& e) {
      ++errors;
    }
  }

  nlohmann::json r;
  r["kind"] = "harmlessness";
  r["config_fingerprint"] = s.fingerprint;
  r["normal"] = {{"queries", queries.size()},
                 {"retrieved_watermark", retrieved_any},
                 {"retrieval_rate", queries.empty() ? 0.0 : static_cast<double>(retrieved_any) / queries.size()},
                 {"emitted", emitted},
                 {"cgsr", retrieved_any ? nlohmann::json(static_cast<double>(emitted) / retrieved_any)
                                        : nlohmann::json(nullptr)},
                 {"errors", errors},
                 {"leaks", leaks}};

  if (relevant_queries) {
    if (!s.cfg.judge) fail(ErrorKind::invalid_config, "relevant-query scoring needs a judge backend");
    auto judge = make_generator(*s.cfg.judge, s.cfg.seed, s.kb, s.specs);
    KnowledgeBase clean = without_watermarks(s.kb);
    auto clean_gen = make_generator(s.cfg.generator, s.cfg.seed, clean, s.specs);
    std::vector<RelevantQuery> rq = read_relevant_queries(*relevant_queries);
    std::vector<std::pair<std::string, std::string>> pairs;
    double rank_sum = 0.0;
    std::size_t rank_n = 0;
    for (std::size_t i = 0; i < rq.size(); ++i) {
      EmbeddingVector q = s.embedder->embed_one(Modality::text, rq[i].query);
      RetrievalResult with = retrieve_top_k(s.kb, q, s.cfg.k);
      rank_sum += rank_of_any(records_for(s.kb, rq[i].watermark_id), with, s.cfg.k);
      ++rank_n;
      GenerationRequest a{rq[i].query, {}, s.cfg.sampling, i};
      for (const auto& e : with.entries) a.image_refs.push_back(s.kb.find(e.id)->asset_ref);
      GenerationRequest b{rq[i].query, {}, s.cfg.sampling, i};
      if (!clean.records().empty()) {
        for (const auto& e : retrieve_top_k(clean, q, s.cfg.k).entries) b.image_refs.push_back(clean.find(e.id)->asset_ref);
      }
      pairs.emplace_back(clean_gen->generate(b), s.generator->generate(a));
    }
    SimScoreSummary sim = mean_simscore(*judge, pairs, s.cfg.sampling);
    r["relevant"] = {{"queries", rq.size()},
                     {"mean_rank", rank_n ? nlohmann::json(rank_sum / rank_n) : nlohmann::json(nullptr)},
                     {"simscore", optional_number(sim.mean)},
                     {"scored", sim.scored},
                     {"unscored", sim.unscored}};
  }
  write_json(s.cfg.out / "harmlessness.json", r);
  return r;
}

// transform ---------------------------------------------------------------------

/// Applies the configured pipeline to every watermark asset, re-embeds the
/// results and writes a new index. Replace mode swaps the watermark records;
/// add mode keeps them and appends the transformed copies.
inline KnowledgeBase cmd_transform(const AuditConfig& cfg, const std::filesystem::path& out_index) {
  cfg.validate();
  if (cfg.transforms.empty()) fail(ErrorKind::invalid_config, "no transforms configured");
  for (const auto& t : cfg.transforms) validate(t);
  KnowledgeBase kb = load_index(cfg.index);
  auto embedder = make_embedder(cfg, optional_corpus(cfg));
  std::filesystem::path dir = cfg.out / "transformed";
  std::filesystem::create_directories(dir);

  KnowledgeBase out(kb.dim());
  std::vector<ImageRecord> added;
  for (const auto& rec : kb.records()) {
    if (!rec.watermark_id) {
      out.add(rec);
      continue;
    }
    std::filesystem::path target = dir / std::filesystem::path(rec.asset_ref).filename();
    try {
      write_png(compose(read_png(rec.asset_ref), cfg.transforms), target);
    } catch (const Error& e) {
      throw Error(e.kind(), "record '" + rec.id + "': " + e.what(), e.retryable());
    }
    ImageRecord t{rec.id, target.string(), embedder->embed_one(Modality::image, target.string()), rec.watermark_id};
    if (cfg.transform_mode == TransformMode::replace) {
      out.add(std::move(t));
    } else {
      out.add(rec);
      t.id += "~transformed";
      added.push_back(std::move(t));
    }
  }
  for (auto& t : added) out.add(std::move(t));
  ensure_parent(out_index);
  save_index(out, out_index);
  return out;
}

// report ------------------------------------------------------------------------

inline std::string csv_field(const nlohmann::json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

/// Flattens a verify or sequential report into CSV tables and a short text summary.
inline std::vector<std::filesystem::path> export_report(const nlohmann::json& report, const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  std::ostringstream summary;
  std::string kind = report.value("kind", std::string("unknown"));
  summary << "kind: " << kind << "\n";
  summary << "decision: " << csv_field(report.value("decision", nlohmann::json(nullptr))) << "\n";
  if (kind == "verify") {
    const auto& a = report.at("aggregate");
    summary << "vsr: " << csv_field(a.at("vsr")) << "\ncgsr: " << csv_field(a.at("cgsr"))
            << "\nmean_rank: " << csv_field(a.at("mean_rank")) << "\n";
    std::ostringstream per;
    per << "spec_id,trials,successes,retrieved,errors,cgsr,mean_rank\n";
    for (const auto& s : a.at("per_spec")) {
      per << csv_field(s["spec_id"]) << ',' << csv_field(s["trials"]) << ',' << csv_field(s["successes"]) << ','
          << csv_field(s["retrieved"]) << ',' << csv_field(s["errors"]) << ',' << csv_field(s["cgsr"]) << ','
          << csv_field(s["mean_rank"]) << '\n';
    }
    write_text(dir / "per_spec.csv", per.str());
    written.push_back(dir / "per_spec.csv");
    if (report.contains("deployment")) {
      std::ostringstream dep;
      dep << "alpha,decision,p_clean,p_watermarked,log_p_clean,log_p_watermarked\n";
      for (const auto& d : report["deployment"]) {
        dep << csv_field(d["alpha"]) << ',' << csv_field(d["decision"]) << ',' << csv_field(d["p_clean"]) << ','
            << csv_field(d["p_watermarked"]) << ',' << csv_field(d["log_p_clean"]) << ','
            << csv_field(d["log_p_watermarked"]) << '\n';
      }
      write_text(dir / "deployment.csv", dep.str());
      written.push_back(dir / "deployment.csv");
    }
  } else if (kind == "sequential") {
    summary << "queries_used: " << csv_field(report.at("queries_used")) << "\nfinal_p: " << csv_field(report.at("final_p"))
            << "\n";
    std::ostringstream tr;
    tr << "queries,p,log_p,t,df\n";
    for (const auto& p : report.at("p_trace")) {
      tr << csv_field(p["queries"]) << ',' << csv_field(p["p"]) << ',' << csv_field(p["log_p"]) << ','
         << csv_field(p["t"]) << ',' << csv_field(p["df"]) << '\n';
    }
    write_text(dir / "p_trace.csv", tr.str());
    written.push_back(dir / "p_trace.csv");
  }
  write_text(dir / "summary.txt", summary.str());
  written.push_back(dir / "summary.txt");
  return written;
}

/// Two-component projection of every record, for plotting watermark and
/// normal records together.
inline std::filesystem::path export_pca(const KnowledgeBase& kb, const std::filesystem::path& dir) {
  std::vector<EmbeddingVector> vecs;
  for (const auto& r : kb.records()) vecs.push_back(r.embedding);
  stats::PcaResult p = stats::pca_project(std::span<const EmbeddingVector>(vecs), 2);
  std::ostringstream csv;
  csv << "id,watermark_id,pc1,pc2\n" << std::setprecision(17);
  for (std::size_t i = 0; i < kb.records().size(); ++i) {
    const auto& r = kb.records()[i];
    csv << r.id << ',' << r.watermark_id.value_or("") << ',' << p.projections[i][0] << ','
        << (p.projections[i].size() > 1 ? p.projections[i][1] : 0.0) << '\n';
  }
  write_text(dir / "pca.csv", csv.str());
  return dir / "pca.csv";
}

/// ROC over per-repetition VSRs of clean-service and watermarked-service logs.
inline std::filesystem::path export_roc(const std::vector<std::filesystem::path>& clean_logs,
                                        const std::vector<std::filesystem::path>& wm_logs,
                                        const std::filesystem::path& dir) {
  auto rates = [](const std::vector<std::filesystem::path>& logs) {
    std::vector<double> out;
    for (const auto& p : logs) {
      TrialLog log = load_trial_log(p);
      for (std::size_t rep = 0; rep < log.header.repetitions; ++rep) {
        std::vector<double> bits = eval_bits(log, static_cast<int>(rep));
        double s = 0.0;
        for (double b : bits) s += b;
        out.push_back(bits.empty() ? 0.0 : s / static_cast<double>(bits.size()));
      }
    }
    return out;
  };
  std::vector<double> c = rates(clean_logs), w = rates(wm_logs);
  std::set<double> thresholds(c.begin(), c.end());
  thresholds.insert(w.begin(), w.end());
  thresholds.insert(0.0);
  thresholds.insert(1.1);
  std::vector<double> th(thresholds.begin(), thresholds.end());
  auto curve = stats::roc_points(c, w, th);
  std::ostringstream csv;
  csv << "threshold,fpr,tpr\n" << std::setprecision(17);
  for (const auto& pt : curve) csv << pt.threshold << ',' << pt.fpr << ',' << pt.tpr << '\n';
  write_text(dir / "roc.csv", csv.str());
  return dir / "roc.csv";
}

}  // namespace wmaudit::audit
