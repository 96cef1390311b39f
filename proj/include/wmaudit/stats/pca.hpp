#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "wmaudit/error.hpp"
#include "wmaudit/kb/embedding.hpp"
#include "wmaudit/util/hash.hpp"

namespace wmaudit::stats {

struct PcaResult {
  std::vector<double> mean;
  std::vector<std::vector<double>> directions;  // orthonormal, strongest first
  std::vector<double> variances;                // variance captured by each direction
  std::vector<std::vector<double>> projections;  // one row per input vector
  bool degenerate = false;                       // all inputs identical
};

struct PcaOptions {
  std::size_t max_iterations = 1000;
  double tolerance = 1e-12;
};

namespace detail {

using Matrix = std::vector<std::vector<double>>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Modified Gram-Schmidt, applied twice. Columns that collapse are replaced
// with fresh pseudo-random directions so the basis always stays complete.
inline void orthonormalize(Matrix& q, std::uint64_t& refill_counter) {
  const std::size_t dim = q.empty() ? 0 : q[0].size();
  for (std::size_t j = 0; j < q.size(); ++j) {
    for (int attempt = 0;; ++attempt) {
      double before = std::sqrt(dot(q[j], q[j]));
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < j; ++i) {
          double c = dot(q[i], q[j]);
          for (std::size_t d = 0; d < dim; ++d) q[j][d] -= c * q[i][d];
        }
      }
      double norm = std::sqrt(dot(q[j], q[j]));
      if (norm > 1e-10 * std::max(before, 1e-300) && norm > 1e-150) {
        for (double& v : q[j]) v /= norm;
        break;
      }
      if (attempt > 8) fail(ErrorKind::degenerate_input, "could not complete an orthonormal basis");
      util::CounterStream rng(0x5ca1ab1eULL + refill_counter++);
      for (std::size_t d = 0; d < dim; ++d) q[j][d] = rng.normal(d);
    }
  }
}

// Cyclic Jacobi eigen-decomposition of a small symmetric matrix.
// On return `a` is diagonal and the columns of `v` are eigenvectors.
inline void jacobi_eigen(Matrix& a, Matrix& v) {
  const std::size_t n = a.size();
  v.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) return;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::fabs(a[p][q]) < 1e-300) continue;
        double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
}

}  // namespace detail

/// Principal-component projection by orthogonal (subspace) power iteration on
/// the sample covariance, applied implicitly as X^T (X v) / (n - 1).
inline PcaResult pca_project(std::span<const std::vector<double>> rows, std::size_t components = 2,
                             const PcaOptions& opts = {}) {
  if (rows.size() < 2) fail(ErrorKind::invalid_input, "PCA needs at least two vectors");
  const std::size_t n = rows.size();
  const std::size_t dim = rows[0].size();
  if (dim == 0) fail(ErrorKind::invalid_input, "PCA input has zero dimension");
  for (const auto& r : rows) {
    if (r.size() != dim) fail(ErrorKind::invalid_input, "PCA inputs have inconsistent dimensions");
  }
  if (components == 0 || components > dim) {
    fail(ErrorKind::invalid_input, "components must lie in [1, dim]");
  }

  PcaResult out;
  out.mean.assign(dim, 0.0);
  for (const auto& r : rows)
    for (std::size_t d = 0; d < dim; ++d) out.mean[d] += r[d];
  for (double& m : out.mean) m /= static_cast<double>(n);

  detail::Matrix x(n, std::vector<double>(dim));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 0; d < dim; ++d) {
      x[i][d] = rows[i][d] - out.mean[d];
      total += x[i][d] * x[i][d];
    }

  if (total == 0.0) {
    out.degenerate = true;
    out.directions.assign(components, std::vector<double>(dim, 0.0));
    for (std::size_t c = 0; c < components; ++c) out.directions[c][c] = 1.0;
    out.variances.assign(components, 0.0);
    out.projections.assign(n, std::vector<double>(components, 0.0));
    return out;
  }

  auto apply_cov = [&](const std::vector<double>& v) {
    std::vector<double> y(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double s = detail::dot(x[i], v);
      for (std::size_t d = 0; d < dim; ++d) y[d] += s * x[i][d];
    }
    for (double& e : y) e /= static_cast<double>(n - 1);
    return y;
  };

  std::uint64_t refill = 0;
  detail::Matrix q(components, std::vector<double>(dim));
  util::CounterStream init(0x9ca0ULL);
  for (std::size_t c = 0; c < components; ++c)
    for (std::size_t d = 0; d < dim; ++d) q[c][d] = init.normal(c * dim + d);
  detail::orthonormalize(q, refill);

  detail::Matrix h(components, std::vector<double>(components));
  detail::Matrix evecs;
  for (std::size_t iter = 0; iter < opts.max_iterations; ++iter) {
    detail::Matrix z(components);
    for (std::size_t c = 0; c < components; ++c) z[c] = apply_cov(q[c]);
    // Rayleigh-Ritz on the current subspace to order and rotate the directions.
    for (std::size_t a = 0; a < components; ++a)
      for (std::size_t b = 0; b < components; ++b) h[a][b] = detail::dot(q[a], z[b]);
    detail::orthonormalize(z, refill);

    double change = 0.0;
    for (std::size_t c = 0; c < components; ++c) {
      // |<q_c, z_c>| -> 1 as the subspace settles (per-column, sign-agnostic).
      double proj = 0.0;
      for (std::size_t b = 0; b < components; ++b) {
        double d = detail::dot(q[c], z[b]);
        proj += d * d;
      }
      change = std::max(change, std::fabs(1.0 - proj));
    }
    q = std::move(z);
    if (change < opts.tolerance) break;
  }

  // Final Rayleigh-Ritz rotation.
  detail::Matrix cq(components);
  for (std::size_t c = 0; c < components; ++c) cq[c] = apply_cov(q[c]);
  for (std::size_t a = 0; a < components; ++a)
    for (std::size_t b = 0; b < components; ++b) h[a][b] = 0.5 * (detail::dot(q[a], cq[b]) + detail::dot(q[b], cq[a]));
  detail::jacobi_eigen(h, evecs);

  std::vector<std::size_t> order(components);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return h[a][a] > h[b][b]; });

  for (std::size_t idx : order) {
    std::vector<double> dir(dim, 0.0);
    for (std::size_t c = 0; c < components; ++c)
      for (std::size_t d = 0; d < dim; ++d) dir[d] += evecs[c][idx] * q[c][d];
    // Sign convention: the largest-magnitude coordinate is positive.
    std::size_t arg = 0;
    for (std::size_t d = 1; d < dim; ++d)
      if (std::fabs(dir[d]) > std::fabs(dir[arg])) arg = d;
    if (dir[arg] < 0)
      for (double& e : dir) e = -e;
    out.directions.push_back(std::move(dir));
    out.variances.push_back(std::max(0.0, h[idx][idx]));
  }
  std::uint64_t unused = refill;
  detail::orthonormalize(out.directions, unused);

  out.projections.assign(n, std::vector<double>(components));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < components; ++c) out.projections[i][c] = detail::dot(x[i], out.directions[c]);
  return out;
}

inline PcaResult pca_project(std::span<const EmbeddingVector> vectors, std::size_t components = 2,
                             const PcaOptions& opts = {}) {
  std::vector<std::vector<double>> rows;
  rows.reserve(vectors.size());
  for (const auto& v : vectors) rows.emplace_back(v.values().begin(), v.values().end());
  return pca_project(std::span<const std::vector<double>>(rows), components, opts);
}

}  // namespace wmaudit::stats
