#pragma once

#include <set>
#include <vector>

#include "wmaudit/backend/embedding.hpp"
#include "wmaudit/corpus/watermark.hpp"
#include "wmaudit/error.hpp"
#include "wmaudit/kb/knowledge_base.hpp"

namespace wmaudit {

/// Returns a new base: the original records, unchanged and in order, followed
/// by one record per spec (record id = spec id, watermark_id set).
inline KnowledgeBase inject_watermarks(const KnowledgeBase& kb, const std::vector<WatermarkSpec>& specs,
                                       EmbeddingBackend& embedder) {
  std::set<std::string> incoming;
  for (const auto& s : specs) {
    if (kb.contains(s.id) || !incoming.insert(s.id).second) {
      fail(ErrorKind::conflict, "watermark id '" + s.id + "' is already present");
    }
  }
  KnowledgeBase out = kb;
  for (const auto& s : specs) {
    EmbeddingVector e;
    try {
      e = embedder.embed_one(Modality::image, s.asset_ref);
    } catch (const Error& err) {
      throw Error(err.kind(), "embedding watermark '" + s.id + "': " + err.what(), err.retryable());
    }
    if (e.dim() != kb.dim()) {
      fail(ErrorKind::invalid_config, "embedder produced dim " + std::to_string(e.dim()) + " for '" + s.id +
                                          "' but the knowledge base uses " + std::to_string(kb.dim()));
    }
    out.add(ImageRecord{s.id, s.asset_ref, std::move(e), s.id});
  }
  return out;
}

}  // namespace wmaudit
