#pragma once

// Corpus file: {"version": 1, "specs": [{id, method, signature, acronym?,
// asset_ref, probes: [{trigger, instruction}]}]}. A bare array of specs and an
// empty file are also accepted.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmaudit/corpus/watermark.hpp"
#include "wmaudit/error.hpp"

namespace wmaudit {

inline nlohmann::json corpus_to_json(const std::vector<WatermarkSpec>& specs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : specs) {
    nlohmann::json j;
    j["id"] = s.id;
    j["method"] = to_string(s.method);
    j["signature"] = s.signature;
    if (s.acronym) j["acronym"] = *s.acronym;
    j["asset_ref"] = s.asset_ref;
    auto& probes = j["probes"] = nlohmann::json::array();
    for (const auto& p : s.probes) probes.push_back({{"trigger", p.trigger}, {"instruction", p.instruction}});
    arr.push_back(std::move(j));
  }
  return nlohmann::json{{"version", 1}, {"specs", std::move(arr)}};
}

inline std::vector<WatermarkSpec> corpus_from_json(const nlohmann::json& doc) {
  const nlohmann::json* arr = &doc;
  if (doc.is_object()) arr = &doc.at("specs");
  if (!arr->is_array()) fail(ErrorKind::parse, "corpus must be an array of specs or {\"specs\": [...]}");

  std::vector<WatermarkSpec> specs;
  for (std::size_t i = 0; i < arr->size(); ++i) {
    const auto& j = (*arr)[i];
    WatermarkSpec s;
    try {
      s.id = j.at("id").get<std::string>();
      s.method = parse_method(j.at("method").get<std::string>());
      s.signature = j.at("signature").get<std::string>();
      if (j.contains("acronym") && !j["acronym"].is_null()) s.acronym = j["acronym"].get<std::string>();
      s.asset_ref = j.at("asset_ref").get<std::string>();
      for (const auto& p : j.at("probes")) {
        std::string trigger = p.at("trigger").get<std::string>();
        std::string instruction = p.at("instruction").get<std::string>();
        if (detail::blank(trigger) || detail::blank(instruction)) {
          fail(ErrorKind::validation, "spec '" + s.id + "' has a probe with an empty part");
        }
        s.probes.push_back(make_probe(std::move(trigger), std::move(instruction)));
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::parse, "corpus entry " + std::to_string(i) + (s.id.empty() ? "" : " ('" + s.id + "')") +
                                 ": " + e.what());
    }
    specs.push_back(std::move(s));
  }
  validate_corpus(specs);
  return specs;
}

inline std::vector<WatermarkSpec> parse_corpus(const std::string& text) {
  if (std::all_of(text.begin(), text.end(), [](char c) { return detail::is_space(c); })) return {};
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("corpus: ") + e.what());
  }
  return corpus_from_json(doc);
}

inline std::vector<WatermarkSpec> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open corpus '" + path.string() + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto specs = parse_corpus(text);
  // Relative asset paths are relative to the corpus file.
  for (auto& s : specs) {
    std::filesystem::path a(s.asset_ref);
    if (a.is_relative() && path.has_parent_path()) s.asset_ref = (path.parent_path() / a).lexically_normal().string();
  }
  return specs;
}

inline void save_corpus(const std::vector<WatermarkSpec>& specs, const std::filesystem::path& path) {
  validate_corpus(specs);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out << corpus_to_json(specs).dump(2) << '\n';
}

/// Corpus structure used by the VSR denominator: N_wm specs with N_ds probes each.
struct GridShape {
  std::size_t n_wm = 0;
  std::size_t n_ds = 0;
  bool uniform = true;
  std::size_t cells = 0;
};

inline GridShape grid_shape(const std::vector<WatermarkSpec>& specs) {
  GridShape g;
  g.n_wm = specs.size();
  for (const auto& s : specs) {
    if (g.cells == 0) g.n_ds = s.probes.size();
    else if (s.probes.size() != g.n_ds) g.uniform = false;
    g.cells += s.probes.size();
  }
  return g;
}

}  // namespace wmaudit
