#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmaudit/backend/embedding.hpp"
#include "wmaudit/backend/generation.hpp"
#include "wmaudit/backend/remote_embedding.hpp"
#include "wmaudit/backend/remote_generation.hpp"
#include "wmaudit/corpus/watermark.hpp"
#include "wmaudit/error.hpp"
#include "wmaudit/kb/knowledge_base.hpp"
#include "wmaudit/stats/deployment.hpp"
#include "wmaudit/stats/reference.hpp"
#include "wmaudit/transforms/ops.hpp"
#include "wmaudit/util/hash.hpp"

namespace wmaudit::audit {

enum class BackendKind { mock, remote, scripted, lexical };

struct EmbedderConfig {
  BackendKind kind = BackendKind::mock;
  MockGeometry geometry;
  // When set, every corpus watermark gets its own cluster, reached by its
  // probe triggers and its asset file name.
  std::optional<double> route_corpus_dispersion;
  RemoteEmbedderConfig remote;
};

struct GeneratorConfig {
  BackendKind kind = BackendKind::scripted;
  std::vector<ScriptedRule> rules;
  std::optional<std::string> default_response = std::string(kNeutralResponse);
  RemoteGeneratorConfig remote;
};

enum class TransformMode { replace, add };

struct AuditConfig {
  std::filesystem::path index;
  std::filesystem::path corpus;
  EmbedderConfig embedder;
  GeneratorConfig generator;
  std::optional<GeneratorConfig> judge;
  std::size_t k = kDefaultTopK;
  SamplingParams sampling;
  std::vector<double> alphas = {0.05, 3e-5};  // the first one drives the decision
  std::optional<stats::ReferencePair> reference;
  std::optional<WatermarkMethod> method;
  std::optional<std::uint64_t> seed;
  std::size_t max_queries = 100;
  std::size_t repetitions = 1;
  std::size_t workers = 1;
  std::filesystem::path out = "audit-out";
  std::vector<TransformSpec> transforms;
  TransformMode transform_mode = TransformMode::replace;
  std::optional<std::filesystem::path> baseline_log;
  bool require_assets = true;

  double decision_alpha() const { return alphas.front(); }

  bool uses_seeded_backend() const {
    auto seeded = [](BackendKind k) { return k == BackendKind::mock || k == BackendKind::scripted; };
    return seeded(embedder.kind) || seeded(generator.kind) || (judge && seeded(judge->kind));
  }

  void validate() const {
    if (k < 1) fail(ErrorKind::invalid_config, "k must be >= 1");
    if (alphas.empty()) fail(ErrorKind::invalid_config, "at least one alpha level is required");
    for (double a : alphas) stats::check_alpha(a);
    if (uses_seeded_backend() && !seed) fail(ErrorKind::invalid_config, "a seed is required with mock or scripted backends");
    if (max_queries < 2) fail(ErrorKind::invalid_config, "max_queries must be >= 2");
    if (repetitions < 1) fail(ErrorKind::invalid_config, "repetitions must be >= 1");
    if (workers < 1) fail(ErrorKind::invalid_config, "workers must be >= 1");
    sampling.validate();
    if (reference && method && reference->method != *method) {
      fail(ErrorKind::invalid_config, "reference distribution method does not match the audited method");
    }
  }
};

namespace detail {

inline backend::HttpSettings http_from_json(const nlohmann::json& j) {
  backend::HttpSettings h;
  h.endpoint = j.value("endpoint", std::string{});
  h.timeout_ms = j.value("timeout_ms", h.timeout_ms);
  h.retries = j.value("retries", h.retries);
  h.backoff_ms = j.value("backoff_ms", h.backoff_ms);
  h.max_in_flight = j.value("max_in_flight", h.max_in_flight);
  return h;
}

inline nlohmann::json http_to_json(const backend::HttpSettings& h) {
  return {{"endpoint", h.endpoint}, {"timeout_ms", h.timeout_ms}, {"retries", h.retries},
          {"backoff_ms", h.backoff_ms}, {"max_in_flight", h.max_in_flight}};
}

inline ImagePayloadMode image_mode_from(const nlohmann::json& j) {
  std::string m = j.value("image_mode", std::string("base64"));
  if (m == "base64") return ImagePayloadMode::base64;
  if (m == "path") return ImagePayloadMode::path;
  fail(ErrorKind::invalid_config, "image_mode must be 'base64' or 'path'");
}

inline std::string_view image_mode_name(ImagePayloadMode m) { return m == ImagePayloadMode::path ? "path" : "base64"; }

inline GeneratorConfig generator_from_json(const nlohmann::json& j) {
  GeneratorConfig g;
  std::string kind = j.value("kind", std::string("scripted"));
  if (kind == "scripted") {
    g.kind = BackendKind::scripted;
    for (const auto& r : j.value("rules", nlohmann::json::array())) g.rules.push_back(rule_from_json(r));
    if (j.contains("default_response")) {
      g.default_response = j["default_response"].is_null() ? std::nullopt
                                                           : std::optional(j["default_response"].get<std::string>());
    }
  } else if (kind == "remote") {
    g.kind = BackendKind::remote;
    g.remote.http = http_from_json(j);
    g.remote.profile = parse_profile(j.value("profile", std::string("native")));
    if (j.contains("model")) g.remote.model = j["model"].get<std::string>();
    g.remote.image_mode = image_mode_from(j);
    g.remote.system_prompt = j.value("system_prompt", g.remote.system_prompt);
    g.remote.user_template = j.value("user_template", g.remote.user_template);
  } else if (kind == "lexical") {
    g.kind = BackendKind::lexical;
  } else {
    fail(ErrorKind::invalid_config, "unknown generator kind '" + kind + "'");
  }
  return g;
}

inline nlohmann::json generator_to_json(const GeneratorConfig& g) {
  if (g.kind == BackendKind::lexical) return {{"kind", "lexical"}};
  if (g.kind == BackendKind::remote) {
    auto j = http_to_json(g.remote.http);
    j["kind"] = "remote";
    j["profile"] = g.remote.profile == GenerationProfile::native ? "native" : "chat";
    if (g.remote.model) j["model"] = *g.remote.model;
    j["image_mode"] = image_mode_name(g.remote.image_mode);
    j["system_prompt"] = g.remote.system_prompt;
    j["user_template"] = g.remote.user_template;
    return j;
  }
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : g.rules) {
    rules.push_back({{"watermark_id", r.watermark_id},
                     {"emission_probability", r.emission_probability},
                     {"template", r.emitted_text_template},
                     {"requires_probe_match", r.requires_probe_match}});
  }
  return {{"kind", "scripted"},
          {"rules", rules},
          {"default_response", g.default_response ? nlohmann::json(*g.default_response) : nlohmann::json(nullptr)}};
}

inline void override_endpoint(backend::HttpSettings& h, const char* var) {
  if (const char* v = std::getenv(var); v && *v) h.endpoint = v;
}

}  // namespace detail

/// Parses an audit config. Relative paths resolve against `base_dir`.
/// Endpoint environment variables (WMAUDIT_EMBED_ENDPOINT,
/// WMAUDIT_GENERATE_ENDPOINT, WMAUDIT_JUDGE_ENDPOINT) override the file;
/// statistical settings are never taken from the environment.
inline AuditConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  AuditConfig c;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  try {
    if (j.contains("index")) c.index = resolve(j["index"].get<std::string>());
    if (j.contains("corpus")) c.corpus = resolve(j["corpus"].get<std::string>());
    c.k = j.value("k", c.k);
    if (j.contains("sampling")) {
      const auto& s = j["sampling"];
      c.sampling.temperature = s.value("temperature", c.sampling.temperature);
      c.sampling.top_k = s.value("top_k", c.sampling.top_k);
      c.sampling.top_p = s.value("top_p", c.sampling.top_p);
    }
    if (j.contains("alphas")) c.alphas = j["alphas"].get<std::vector<double>>();
    if (j.contains("method")) c.method = parse_method(j["method"].get<std::string>());
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    c.max_queries = j.value("max_queries", c.max_queries);
    c.repetitions = j.value("repetitions", c.repetitions);
    c.workers = j.value("workers", c.workers);
    if (j.contains("out")) c.out = resolve(j["out"].get<std::string>());
    c.require_assets = j.value("require_assets", c.require_assets);
    if (j.contains("baseline_log")) c.baseline_log = resolve(j["baseline_log"].get<std::string>());

    if (j.contains("reference")) {
      const auto& r = j["reference"];
      std::size_t n = j.value("assumed_n", stats::kDefaultAssumedN);
      if (r.is_string()) {
        std::string name = r.get<std::string>();
        if (name == "acronym" || name == "spatial") c.reference = stats::preset(name, n);
        else c.reference = stats::load_reference(resolve(name));
      } else {
        c.reference = stats::reference_from_json(r);
      }
    }

    if (j.contains("embedder")) {
      const auto& e = j["embedder"];
      std::string kind = e.value("kind", std::string("mock"));
      if (kind == "mock") {
        c.embedder.kind = BackendKind::mock;
        c.embedder.geometry = geometry_from_json(e.value("geometry", nlohmann::json::object()));
        if (e.contains("route_corpus")) c.embedder.route_corpus_dispersion = e["route_corpus"].value("dispersion", 0.05);
      } else if (kind == "remote") {
        c.embedder.kind = BackendKind::remote;
        c.embedder.remote.http = detail::http_from_json(e);
        if (e.contains("model")) c.embedder.remote.model = e["model"].get<std::string>();
        c.embedder.remote.batch_size = e.value("batch_size", c.embedder.remote.batch_size);
        c.embedder.remote.image_mode = detail::image_mode_from(e);
      } else {
        fail(ErrorKind::invalid_config, "unknown embedder kind '" + kind + "'");
      }
    }
    if (j.contains("generator")) c.generator = detail::generator_from_json(j["generator"]);
    if (j.contains("judge")) c.judge = detail::generator_from_json(j["judge"]);
    if (j.contains("transforms")) c.transforms = pipeline_from_json(j["transforms"]);
    if (j.contains("transform_mode")) {
      std::string m = j["transform_mode"].get<std::string>();
      if (m == "replace") c.transform_mode = TransformMode::replace;
      else if (m == "add") c.transform_mode = TransformMode::add;
      else fail(ErrorKind::invalid_config, "transform_mode must be 'replace' or 'add'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("audit config: ") + e.what());
  }

  detail::override_endpoint(c.embedder.remote.http, "WMAUDIT_EMBED_ENDPOINT");
  detail::override_endpoint(c.generator.remote.http, "WMAUDIT_GENERATE_ENDPOINT");
  if (c.judge) detail::override_endpoint(c.judge->remote.http, "WMAUDIT_JUDGE_ENDPOINT");
  return c;
}

inline AuditConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("audit config: ") + e.what());
  }
  return config_from_json(j, path.parent_path());
}

/// Canonical form of every setting that can change audit numbers. Paths,
/// output directory and worker count are excluded; input files enter the
/// fingerprint through their content hashes instead.
inline nlohmann::json canonical_settings(const AuditConfig& c) {
  nlohmann::json j;
  j["k"] = c.k;
  j["sampling"] = {{"temperature", c.sampling.temperature}, {"top_k", c.sampling.top_k}, {"top_p", c.sampling.top_p}};
  j["alphas"] = c.alphas;
  j["method"] = c.method ? nlohmann::json(to_string(*c.method)) : nlohmann::json(nullptr);
  j["seed"] = c.seed ? nlohmann::json(*c.seed) : nlohmann::json(nullptr);
  j["max_queries"] = c.max_queries;
  j["repetitions"] = c.repetitions;
  j["reference"] = c.reference ? stats::to_json(*c.reference) : nlohmann::json(nullptr);
  if (c.embedder.kind == BackendKind::mock) {
    j["embedder"] = {{"kind", "mock"}, {"geometry", to_json(c.embedder.geometry)}};
    if (c.embedder.route_corpus_dispersion) j["embedder"]["route_corpus"] = *c.embedder.route_corpus_dispersion;
  } else {
    j["embedder"] = detail::http_to_json(c.embedder.remote.http);
    j["embedder"]["kind"] = "remote";
    j["embedder"]["model"] = c.embedder.remote.model ? nlohmann::json(*c.embedder.remote.model) : nlohmann::json(nullptr);
  }
  j["generator"] = detail::generator_to_json(c.generator);
  j["judge"] = c.judge ? detail::generator_to_json(*c.judge) : nlohmann::json(nullptr);
  return j;
}

inline std::string file_digest(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return "missing";
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return util::sha256_hex(bytes);
}

inline std::string config_fingerprint(const AuditConfig& c) {
  nlohmann::json j = canonical_settings(c);
  j["index_sha256"] = c.index.empty() ? "" : file_digest(c.index);
  j["corpus_sha256"] = c.corpus.empty() ? "" : file_digest(c.corpus);
  return util::sha256_hex(j.dump());
}

}  // namespace wmaudit::audit
