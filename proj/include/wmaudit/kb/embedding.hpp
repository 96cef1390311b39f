#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wmaudit/error.hpp"

namespace wmaudit {

/// Dense embedding vector. Elements are stored as 32-bit floats and every
/// element is guaranteed finite; the L2 norm is cached in double precision.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;

  explicit EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {
    if (values_.empty()) fail(ErrorKind::invalid_input, "embedding must have positive dimension");
    double sq = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        fail(ErrorKind::invalid_input, "embedding element " + std::to_string(i) + " is not finite");
      }
      sq += static_cast<double>(values_[i]) * static_cast<double>(values_[i]);
    }
    norm_ = std::sqrt(sq);
  }

  static EmbeddingVector from_doubles(std::span<const double> values) {
    std::vector<float> v(values.begin(), values.end());
    return EmbeddingVector(std::move(v));
  }

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const float> values() const noexcept { return values_; }
  float operator[](std::size_t i) const noexcept { return values_[i]; }
  double norm() const noexcept { return norm_; }
  bool is_zero() const noexcept { return norm_ == 0.0; }

  friend bool operator==(const EmbeddingVector& a, const EmbeddingVector& b) {
    return a.values_ == b.values_;
  }

 private:
  std::vector<float> values_;
  double norm_ = 0.0;
};

inline double dot(const EmbeddingVector& a, const EmbeddingVector& b) noexcept {
  double acc = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    acc += static_cast<double>(av[i]) * static_cast<double>(bv[i]);
  }
  return acc;
}

// Clamped to [-1, 1] to absorb rounding at the extremes.
inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    fail(ErrorKind::invalid_input, "dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                                       std::to_string(b.dim()));
  }
  if (a.is_zero() || b.is_zero()) fail(ErrorKind::degenerate_input, "zero vector has no direction");
  double c = dot(a, b) / (a.norm() * b.norm());
  return std::clamp(c, -1.0, 1.0);
}

}  // namespace wmaudit
