#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmaudit/corpus/prompts.hpp"
#include "wmaudit/corpus/watermark.hpp"
#include "wmaudit/error.hpp"
#include "wmaudit/kb/knowledge_base.hpp"
#include "wmaudit/util/hash.hpp"
#include "wmaudit/verify/eval.hpp"

namespace wmaudit {

struct SamplingParams {
  double temperature = 1.2;
  int top_k = 5;
  double top_p = 0.9;

  void validate() const {
    if (!(temperature > 0.0)) fail(ErrorKind::invalid_input, "temperature must be positive");
    if (top_k < 1) fail(ErrorKind::invalid_input, "top_k must be >= 1");
    if (!(top_p > 0.0 && top_p <= 1.0)) fail(ErrorKind::invalid_input, "top_p must lie in (0, 1]");
  }
};

struct GenerationRequest {
  std::string query_text;
  std::vector<std::string> image_refs;  // retrieved assets, best first
  SamplingParams sampling;
  std::uint64_t trial_key = 0;  // identifies the request within its run; seeds scripted sampling
};

struct GenerationOutcome {
  std::optional<std::string> text;
  std::optional<std::string> error;
  bool ok() const noexcept { return text.has_value(); }
};

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string generate(const GenerationRequest& request) = 0;

  /// Positionally aligned with `requests`; a failing request is reported in
  /// its own slot and does not abort the batch.
  virtual std::vector<GenerationOutcome> generate_batch(std::span<const GenerationRequest> requests) {
    std::vector<GenerationOutcome> out;
    out.reserve(requests.size());
    for (const auto& r : requests) {
      try {
        out.push_back({generate(r), std::nullopt});
      } catch (const Error& e) {
        out.push_back({std::nullopt, std::string(e.what())});
      }
    }
    return out;
  }
};

// Scripted generator --------------------------------------------------------

struct ScriptedRule {
  std::string watermark_id;  // "*" applies to every catalogued watermark
  double emission_probability = 1.0;
  std::string emitted_text_template = "The answer is {signature}.";
  bool requires_probe_match = true;

  void validate() const {
    if (!(emission_probability >= 0.0 && emission_probability <= 1.0)) {
      fail(ErrorKind::invalid_config, "rule '" + watermark_id + "': emission probability must lie in [0, 1]");
    }
  }
};

/// What the scripted generator knows about a watermark asset.
struct CatalogEntry {
  std::string watermark_id;
  std::string signature;
  std::vector<std::string> normalized_instructions;
};

using WatermarkCatalog = std::map<std::string, CatalogEntry>;  // keyed by asset_ref

/// Maps each watermark record's asset to its spec so the scripted generator can
/// recognize watermark images among the retrieved references.
inline WatermarkCatalog build_catalog(const KnowledgeBase& kb, const std::vector<WatermarkSpec>& specs) {
  WatermarkCatalog cat;
  for (const auto& rec : kb.records()) {
    if (!rec.watermark_id) continue;
    const WatermarkSpec* spec = find_spec(specs, *rec.watermark_id);
    if (!spec) {
      fail(ErrorKind::validation, "record '" + rec.id + "' references unknown watermark '" + *rec.watermark_id + "'");
    }
    CatalogEntry e{spec->id, spec->signature, {}};
    for (const auto& p : spec->probes) e.normalized_instructions.push_back(normalize(p.instruction));
    cat[rec.asset_ref] = std::move(e);
  }
  return cat;
}

inline constexpr std::string_view kNeutralResponse = "I could not find that information in the provided images.";

struct ScriptedConfig {
  std::uint64_t run_seed = 0;
  std::vector<ScriptedRule> rules;
  std::optional<std::string> default_response = std::string(kNeutralResponse);
};

/// Models a VLM whose signal emission is a Bernoulli draw per retrieved
/// watermark image. Draws depend only on (run_seed, trial_key, image slot), so
/// batches are order-independent and runs replay exactly.
class ScriptedGenerator final : public GenerationBackend {
 public:
  ScriptedGenerator(ScriptedConfig cfg, WatermarkCatalog catalog) : cfg_(std::move(cfg)), catalog_(std::move(catalog)) {
    if (cfg_.rules.empty() && !cfg_.default_response) {
      fail(ErrorKind::invalid_config, "scripted generator has no rules and no default response");
    }
    for (const auto& r : cfg_.rules) r.validate();
  }

  std::string generate(const GenerationRequest& request) override {
    request.sampling.validate();
    std::string query = normalize(request.query_text);
    util::CounterStream draws(util::mix_seed(cfg_.run_seed, request.trial_key));
    for (std::size_t slot = 0; slot < request.image_refs.size(); ++slot) {
      auto it = catalog_.find(request.image_refs[slot]);
      if (it == catalog_.end()) continue;
      const CatalogEntry& wm = it->second;
      const ScriptedRule* rule = rule_for(wm.watermark_id);
      if (!rule) continue;
      if (rule->requires_probe_match && !probe_matches(wm, query)) continue;
      if (draws.uniform(slot) < rule->emission_probability) {
        return substitute(rule->emitted_text_template, {{"signature", wm.signature}});
      }
    }
    if (!cfg_.default_response) {
      fail(ErrorKind::invalid_config, "no rule fired and no default response is configured");
    }
    return *cfg_.default_response;
  }

 private:
  const ScriptedRule* rule_for(const std::string& watermark_id) const {
    const ScriptedRule* wildcard = nullptr;
    for (const auto& r : cfg_.rules) {
      if (r.watermark_id == watermark_id) return &r;
      if (r.watermark_id == "*") wildcard = &r;
    }
    return wildcard;
  }

  static bool probe_matches(const CatalogEntry& wm, const std::string& normalized_query) {
    for (const auto& ins : wm.normalized_instructions) {
      if (!ins.empty() && normalized_query.find(ins) != std::string::npos) return true;
    }
    return false;
  }

  ScriptedConfig cfg_;
  WatermarkCatalog catalog_;
};

/// Backend driven by a callable; handy for judges and tests.
class CallbackGenerator final : public GenerationBackend {
 public:
  explicit CallbackGenerator(std::function<std::string(const GenerationRequest&)> fn) : fn_(std::move(fn)) {}
  std::string generate(const GenerationRequest& request) override { return fn_(request); }

 private:
  std::function<std::string(const GenerationRequest&)> fn_;
};

/// Offline judge: scores the two answers inside a SimScore prompt by word-set
/// overlap (Jaccard x 100) and replies with the bare integer.
class LexicalJudge final : public GenerationBackend {
 public:
  std::string generate(const GenerationRequest& request) override {
    auto grab = [&](std::string_view label) {
      auto pos = request.query_text.find(label);
      if (pos == std::string::npos) return std::string{};
      pos += label.size();
      auto end = request.query_text.find('\n', pos);
      return request.query_text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    };
    auto words = [](const std::string& s) {
      std::set<std::string> out;
      std::string cur;
      for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        else if (!cur.empty()) out.insert(std::exchange(cur, {}));
      }
      if (!cur.empty()) out.insert(cur);
      return out;
    };
    auto a = words(grab("String 1: "));
    auto b = words(grab("String 2: "));
    std::size_t inter = 0;
    for (const auto& w : a) inter += b.count(w);
    std::size_t uni = a.size() + b.size() - inter;
    long score = uni == 0 ? 100 : std::lround(100.0 * static_cast<double>(inter) / static_cast<double>(uni));
    return std::to_string(score);
  }
};

inline ScriptedRule rule_from_json(const nlohmann::json& j) {
  ScriptedRule r;
  r.watermark_id = j.value("watermark_id", std::string("*"));
  r.emission_probability = j.value("emission_probability", 1.0);
  r.emitted_text_template = j.value("template", r.emitted_text_template);
  r.requires_probe_match = j.value("requires_probe_match", true);
  r.validate();
  return r;
}

}  // namespace wmaudit
