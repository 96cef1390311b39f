#pragma once

// Index file: JSON lines. Line 1 is {"version","dim","count"}; each following
// line is {"id","asset_ref","watermark_id","embedding"}.

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "wmaudit/error.hpp"
#include "wmaudit/kb/knowledge_base.hpp"

namespace wmaudit {

inline constexpr int kIndexVersion = 1;

inline void write_index(const KnowledgeBase& kb, std::ostream& out) {
  nlohmann::json header{{"version", kIndexVersion}, {"dim", kb.dim()}, {"count", kb.size()}};
  out << header.dump() << '\n';
  for (const auto& rec : kb.records()) {
    nlohmann::json line;
    line["id"] = rec.id;
    line["asset_ref"] = rec.asset_ref;
    line["watermark_id"] = rec.watermark_id ? nlohmann::json(*rec.watermark_id) : nlohmann::json(nullptr);
    auto& emb = line["embedding"] = nlohmann::json::array();
    // float -> double is exact and the writer emits shortest round-trip digits.
    for (float v : rec.embedding.values()) emb.push_back(static_cast<double>(v));
    out << line.dump() << '\n';
  }
}

inline KnowledgeBase read_index(std::istream& in) {
  std::string text;
  std::size_t line_no = 0;
  auto parse_line = [&](const std::string& s) {
    try {
      return nlohmann::json::parse(s);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::parse, "index line " + std::to_string(line_no) + ": " + e.what());
    }
  };

  if (!std::getline(in, text)) fail(ErrorKind::parse, "index line 1: missing header");
  line_no = 1;
  auto header = parse_line(text);
  std::size_t dim = 0;
  std::size_t count = 0;
  try {
    if (header.at("version").get<int>() != kIndexVersion) {
      fail(ErrorKind::invalid_index, "unsupported index version " + header.at("version").dump());
    }
    dim = header.at("dim").get<std::size_t>();
    count = header.at("count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("index line 1: bad header: ") + e.what());
  }
  if (dim == 0) fail(ErrorKind::invalid_index, "header dim must be positive");

  KnowledgeBase kb(dim);
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    auto j = parse_line(text);
    ImageRecord rec;
    std::vector<float> values;
    try {
      rec.id = j.at("id").get<std::string>();
      rec.asset_ref = j.at("asset_ref").get<std::string>();
      const auto& wm = j.at("watermark_id");
      if (!wm.is_null()) rec.watermark_id = wm.get<std::string>();
      for (const auto& v : j.at("embedding")) values.push_back(static_cast<float>(v.get<double>()));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::parse, "index line " + std::to_string(line_no) + ": " + e.what());
    }
    if (values.size() != dim) {
      fail(ErrorKind::invalid_index, "record '" + rec.id + "' (line " + std::to_string(line_no) +
                                         ") has dim " + std::to_string(values.size()) +
                                         ", header says " + std::to_string(dim));
    }
    try {
      rec.embedding = EmbeddingVector(std::move(values));
      kb.add(std::move(rec));
    } catch (const Error& e) {
      fail(ErrorKind::invalid_index, "index line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (kb.size() != count) {
    fail(ErrorKind::invalid_index, "header count " + std::to_string(count) + " but file holds " +
                                       std::to_string(kb.size()) + " records");
  }
  return kb;
}

inline void save_index(const KnowledgeBase& kb, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  write_index(kb, out);
  if (!out) fail(ErrorKind::io, "write failed for '" + path.string() + "'");
}

inline KnowledgeBase load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open index '" + path.string() + "'");
  return read_index(in);
}

}  // namespace wmaudit
