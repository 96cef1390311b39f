#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wmaudit/error.hpp"
#include "wmaudit/kb/embedding.hpp"

namespace wmaudit {

struct ImageRecord {
  std::string id;
  std::string asset_ref;
  EmbeddingVector embedding;
  std::optional<std::string> watermark_id;

  bool is_watermark() const noexcept { return watermark_id.has_value(); }
  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

/// Flat cosine-similarity store. Records keep insertion order; the base is
/// treated as immutable once built, so concurrent const access is safe.
class KnowledgeBase {
 public:
  explicit KnowledgeBase(std::size_t dim) : dim_(dim) {
    if (dim == 0) fail(ErrorKind::invalid_input, "knowledge base dimension must be positive");
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const std::vector<ImageRecord>& records() const noexcept { return records_; }
  const ImageRecord& operator[](std::size_t i) const { return records_[i]; }

  bool contains(std::string_view id) const { return by_id_.contains(std::string(id)); }

  const ImageRecord* find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &records_[it->second];
  }

  void add(ImageRecord record) {
    if (record.id.empty()) fail(ErrorKind::invalid_input, "record id must be non-empty");
    if (record.embedding.dim() != dim_) {
      fail(ErrorKind::invalid_input, "record '" + record.id + "' has dim " +
                                         std::to_string(record.embedding.dim()) + ", expected " +
                                         std::to_string(dim_));
    }
    if (record.embedding.is_zero()) {
      fail(ErrorKind::degenerate_input, "record '" + record.id + "' has a zero embedding");
    }
    if (contains(record.id)) fail(ErrorKind::conflict, "duplicate record id '" + record.id + "'");
    by_id_.emplace(record.id, records_.size());
    records_.push_back(std::move(record));
  }

  std::size_t watermark_count() const {
    return static_cast<std::size_t>(
        std::count_if(records_.begin(), records_.end(), [](const auto& r) { return r.is_watermark(); }));
  }

  friend bool operator==(const KnowledgeBase& a, const KnowledgeBase& b) {
    return a.dim_ == b.dim_ && a.records_ == b.records_;
  }

 private:
  std::size_t dim_;
  std::vector<ImageRecord> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

struct RetrievalEntry {
  std::string id;
  double score = 0.0;
  friend bool operator==(const RetrievalEntry&, const RetrievalEntry&) = default;
};

struct RetrievalResult {
  std::string query_id;
  std::vector<RetrievalEntry> entries;
  std::size_t k = 0;

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.id);
    return out;
  }
};

inline constexpr std::size_t kDefaultTopK = 5;

// Higher similarity first; equal similarity falls back to ascending id.
inline bool ranks_before(const RetrievalEntry& a, const RetrievalEntry& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

inline RetrievalResult retrieve_top_k(const KnowledgeBase& kb, const EmbeddingVector& query,
                                      std::size_t k = kDefaultTopK, std::string query_id = {}) {
  if (kb.empty()) fail(ErrorKind::empty_kb, "cannot retrieve from an empty knowledge base");
  if (k == 0) fail(ErrorKind::invalid_input, "k must be at least 1");
  if (query.dim() != kb.dim()) {
    fail(ErrorKind::invalid_input, "query dim " + std::to_string(query.dim()) +
                                       " does not match knowledge base dim " + std::to_string(kb.dim()));
  }
  if (query.is_zero()) fail(ErrorKind::degenerate_input, "query embedding is a zero vector");

  std::vector<RetrievalEntry> scored;
  scored.reserve(kb.size());
  for (const auto& rec : kb.records()) {
    scored.push_back({rec.id, cosine_similarity(query, rec.embedding)});
  }
  std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                    ranks_before);
  scored.resize(take);
  return RetrievalResult{std::move(query_id), std::move(scored), k};
}

/// 1-based position of target_id in the result; 2k when it was not retrieved.
inline int rank_of(std::string_view target_id, const RetrievalResult& result, std::size_t k) {
  for (std::size_t i = 0; i < result.entries.size() && i < k; ++i) {
    if (result.entries[i].id == target_id) return static_cast<int>(i + 1);
  }
  return static_cast<int>(2 * k);
}

// Best rank among several acceptable targets (a watermark may own more than one record).
inline int rank_of_any(std::span<const std::string> target_ids, const RetrievalResult& result,
                       std::size_t k) {
  int best = static_cast<int>(2 * k);
  for (const auto& id : target_ids) best = std::min(best, rank_of(id, result, k));
  return best;
}

inline bool retrieved(int rank, std::size_t k) noexcept {
  return rank >= 1 && static_cast<std::size_t>(rank) <= k;
}

}  // namespace wmaudit
