// wmaudit: command-line front end for watermark-based RAG data audits.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wmaudit.hpp"

namespace {

using namespace wmaudit;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitWatermarked = 2;
constexpr int kExitInconclusive = 3;

int decision_exit(stats::Decision d) {
  switch (d) {
    case stats::Decision::clean: return kExitOk;
    case stats::Decision::uses_watermarked_data: return kExitWatermarked;
    case stats::Decision::inconclusive: return kExitInconclusive;
  }
  return kExitError;
}

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::vector<double> alphas;
  std::string out;
  std::string index;
  std::string corpus;
};

audit::AuditConfig resolve_config(const GlobalFlags& g) {
  audit::AuditConfig cfg = g.config.empty() ? audit::config_from_json(nlohmann::json::object())
                                            : audit::load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.workers) cfg.workers = *g.workers;
  if (!g.alphas.empty()) cfg.alphas = g.alphas;
  if (!g.out.empty()) cfg.out = g.out;
  if (!g.index.empty()) cfg.index = g.index;
  if (!g.corpus.empty()) cfg.corpus = g.corpus;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audit a multimodal RAG service for use of watermarked images"};
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--config", g.config, "audit config (JSON)");
  app.add_option("--seed", g.seed, "run seed for mock and scripted backends");
  app.add_option("--workers", g.workers, "concurrent probe workers");
  app.add_option("--alpha", g.alphas, "significance level(s); the first decides")->expected(1, -1);
  app.add_option("--out", g.out, "output directory");
  app.add_option("--index", g.index, "knowledge-base index (JSONL)");
  app.add_option("--corpus", g.corpus, "watermark corpus (JSON)");

  auto* index = app.add_subcommand("index", "embed an asset directory into a new index");
  std::string assets;
  index->add_option("--assets", assets, "directory of images")->required();

  auto* inject = app.add_subcommand("inject", "add the corpus watermark images to an index");
  std::string inject_out;
  inject->add_option("--output", inject_out, "where to write the watermarked index")->required();

  app.add_subcommand("probe", "run the probe grid and write the evidence log");

  auto* verify = app.add_subcommand("verify", "aggregate an evidence log and test it");
  std::string log_path, baseline;
  verify->add_option("--log", log_path, "evidence log (default: <out>/evidence.jsonl)");
  verify->add_option("--baseline", baseline, "evidence log from a known-clean service");

  auto* sequential = app.add_subcommand("sequential", "query until the test rejects or the budget runs out");
  std::optional<std::size_t> max_queries;
  sequential->add_option("--max-queries", max_queries, "query budget");

  auto* harmless = app.add_subcommand("harmlessness", "measure watermark leakage on ordinary queries");
  std::string normal_queries, relevant_queries;
  harmless->add_option("--queries", normal_queries, "file with one ordinary query per line")->required();
  harmless->add_option("--relevant", relevant_queries, "JSONL of {query, watermark_id} for answer comparison");

  auto* transform = app.add_subcommand("transform", "perturb watermark assets and re-index them");
  std::string condition, mode, transform_out;
  transform->add_option("--condition", condition, "rescale | rotate | gaussian | combined")
      ->check(CLI::IsMember({"rescale", "rotate", "gaussian", "combined"}));
  transform->add_option("--mode", mode, "replace or add")->check(CLI::IsMember({"replace", "add"}));
  transform->add_option("--output", transform_out, "where to write the new index")->required();

  auto* report = app.add_subcommand("report", "export tables and plots data");
  std::string report_json, pca_index;
  std::vector<std::string> clean_logs, wm_logs;
  report->add_option("--report", report_json, "verify or sequential report JSON");
  report->add_option("--pca-index", pca_index, "index to project onto two principal components");
  report->add_option("--clean-log", clean_logs, "evidence logs from clean services (ROC)");
  report->add_option("--wm-log", wm_logs, "evidence logs from watermarked services (ROC)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; every usage error maps to the generic error code.
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }

  try {
    audit::AuditConfig cfg = resolve_config(g);
    if (*index) {
      KnowledgeBase kb = audit::cmd_index(cfg, assets);
      std::cout << "indexed " << kb.size() << " images into " << cfg.index.string() << "\n";
    } else if (*inject) {
      KnowledgeBase kb = audit::cmd_inject(cfg, inject_out);
      std::cout << "wrote " << kb.size() << " records (" << kb.watermark_count() << " watermarks) to " << inject_out
                << "\n";
    } else if (app.got_subcommand("probe")) {
      TrialLog log = audit::cmd_probe(cfg);
      AuditAggregate a = aggregate(log.trials, log.header.grid_cells * log.header.repetitions, log.header.k);
      std::cout << "trials " << a.n_trials << ", VSR " << a.vsr << ", errors " << a.errors << "\n"
                << "evidence: " << audit::evidence_path(cfg).string() << "\n";
    } else if (*verify) {
      if (!baseline.empty()) cfg.baseline_log = baseline;
      auto v = audit::cmd_verify(cfg, log_path.empty() ? audit::evidence_path(cfg) : std::filesystem::path(log_path));
      std::cout << "decision: " << stats::to_string(v.decision) << " (alpha " << cfg.decision_alpha() << ")\n"
                << "report: " << (cfg.out / "report.json").string() << "\n";
      return decision_exit(v.decision);
    } else if (*sequential) {
      if (max_queries) cfg.max_queries = *max_queries;
      auto s = audit::cmd_sequential(cfg);
      std::cout << "decision: " << stats::to_string(s.result.decision) << " after " << s.result.queries_used
                << " queries\n";
      return decision_exit(s.result.decision);
    } else if (*harmless) {
      std::optional<std::filesystem::path> rel;
      if (!relevant_queries.empty()) rel = relevant_queries;
      nlohmann::json r = audit::cmd_harmlessness(cfg, normal_queries, rel);
      std::cout << r.dump(2) << "\n";
    } else if (*transform) {
      if (!condition.empty()) cfg.transforms = named_condition(condition);
      if (mode == "add") cfg.transform_mode = audit::TransformMode::add;
      if (mode == "replace") cfg.transform_mode = audit::TransformMode::replace;
      KnowledgeBase kb = audit::cmd_transform(cfg, transform_out);
      std::cout << "wrote " << kb.size() << " records to " << transform_out << "\n";
    } else if (*report) {
      std::filesystem::path dir = cfg.out;
      if (!report_json.empty()) {
        for (const auto& p : audit::export_report(audit::read_json(report_json), dir)) std::cout << p.string() << "\n";
      }
      if (!pca_index.empty()) std::cout << audit::export_pca(load_index(pca_index), dir).string() << "\n";
      if (!clean_logs.empty() || !wm_logs.empty()) {
        std::vector<std::filesystem::path> c(clean_logs.begin(), clean_logs.end());
        std::vector<std::filesystem::path> w(wm_logs.begin(), wm_logs.end());
        std::cout << audit::export_roc(c, w, dir).string() << "\n";
      }
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitOk;
}
