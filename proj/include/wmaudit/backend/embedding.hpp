#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmaudit/error.hpp"
#include "wmaudit/kb/embedding.hpp"
#include "wmaudit/util/hash.hpp"

namespace wmaudit {

enum class Modality { text, image };

inline std::string_view to_string(Modality m) { return m == Modality::text ? "text" : "image"; }

struct EmbedRequest {
  Modality modality = Modality::text;
  std::vector<std::string> inputs;  // texts, or asset references for images

  void validate() const {
    if (inputs.empty()) fail(ErrorKind::invalid_input, "embed request has no inputs");
  }
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  /// One vector per input, in input order, each of dim() elements.
  virtual std::vector<EmbeddingVector> embed(const EmbedRequest& request) = 0;
  virtual std::size_t dim() const = 0;
  virtual std::string model() const = 0;

  EmbeddingVector embed_one(Modality m, std::string payload) {
    auto out = embed(EmbedRequest{m, {std::move(payload)}});
    return std::move(out.at(0));
  }
};

// Mock geometry ----------------------------------------------------------------

struct CentroidSpec {
  enum class Kind { random, axis, vector } kind = Kind::random;
  std::size_t axis = 0;
  std::vector<double> values;
};

struct Cluster {
  std::string name;
  CentroidSpec centroid;
  double dispersion = 0.0;
};

struct Assignment {
  std::string pattern;  // matched as a prefix of the payload key
  std::string cluster;
};

/// Controllable stand-in for a learned embedding space. A payload that
/// matches an assignment lands at normalize(centroid + dispersion * noise);
/// unmatched payloads get a pseudo-random direction. Noise is a pure function
/// of (seed, payload).
struct MockGeometry {
  std::size_t dim = 64;
  std::uint64_t seed = 0;
  std::vector<Cluster> clusters;
  std::vector<Assignment> assignments;

  void validate() const {
    if (dim == 0) fail(ErrorKind::invalid_config, "mock geometry dim must be positive");
    std::set<std::string> names;
    for (const auto& c : clusters) {
      if (!names.insert(c.name).second) fail(ErrorKind::invalid_config, "duplicate cluster '" + c.name + "'");
      if (!(c.dispersion >= 0.0)) fail(ErrorKind::invalid_config, "cluster '" + c.name + "' has negative dispersion");
      if (c.centroid.kind == CentroidSpec::Kind::axis && c.centroid.axis >= dim) {
        fail(ErrorKind::invalid_config, "cluster '" + c.name + "' axis out of range");
      }
      if (c.centroid.kind == CentroidSpec::Kind::vector) {
        if (c.centroid.values.size() != dim) fail(ErrorKind::invalid_config, "cluster '" + c.name + "' centroid has wrong dim");
        double sq = 0.0;
        for (double v : c.centroid.values) sq += v * v;
        if (!(sq > 0.0) || !std::isfinite(sq)) fail(ErrorKind::invalid_config, "cluster '" + c.name + "' centroid is degenerate");
      }
    }
    for (const auto& a : assignments) {
      if (!names.contains(a.cluster)) {
        fail(ErrorKind::invalid_config, "assignment '" + a.pattern + "' names unknown cluster '" + a.cluster + "'");
      }
    }
  }
};

// Image payloads are keyed by file name so relocating assets keeps embeddings.
inline std::string payload_key(Modality m, std::string_view payload) {
  if (m == Modality::text) return std::string(payload);
  return std::filesystem::path(std::string(payload)).filename().string();
}

class MockEmbedder final : public EmbeddingBackend {
 public:
  explicit MockEmbedder(MockGeometry geometry) : g_(std::move(geometry)) {
    g_.validate();
    for (std::size_t i = 0; i < g_.clusters.size(); ++i) {
      index_.emplace(g_.clusters[i].name, i);
      centroids_.push_back(make_centroid(g_.clusters[i]));
    }
  }

  const MockGeometry& geometry() const noexcept { return g_; }
  std::size_t dim() const override { return g_.dim; }
  std::string model() const override { return "mock-geometry"; }

  std::vector<EmbeddingVector> embed(const EmbedRequest& request) override {
    request.validate();
    std::vector<EmbeddingVector> out;
    out.reserve(request.inputs.size());
    for (const auto& p : request.inputs) out.push_back(embed_key(payload_key(request.modality, p)));
    return out;
  }

  /// Name of the cluster a payload routes to, if any (longest prefix wins).
  std::optional<std::string> route(std::string_view key) const {
    const Assignment* best = nullptr;
    for (const auto& a : g_.assignments) {
      if (key.starts_with(a.pattern) && (!best || a.pattern.size() > best->pattern.size())) best = &a;
    }
    if (!best) return std::nullopt;
    return best->cluster;
  }

 private:
  std::vector<double> unit_noise(std::uint64_t key) const {
    util::CounterStream rng(key);
    std::vector<double> v(g_.dim);
    double scale = 1.0 / std::sqrt(static_cast<double>(g_.dim));
    for (std::size_t d = 0; d < g_.dim; ++d) v[d] = rng.normal(d) * scale;
    return v;
  }

  std::vector<double> make_centroid(const Cluster& c) const {
    std::vector<double> v(g_.dim, 0.0);
    switch (c.centroid.kind) {
      case CentroidSpec::Kind::axis: v[c.centroid.axis] = 1.0; break;
      case CentroidSpec::Kind::vector: v = c.centroid.values; break;
      case CentroidSpec::Kind::random: v = unit_noise(util::key_for(g_.seed, "cluster\x1f" + c.name)); break;
    }
    double n = 0.0;
    for (double e : v) n += e * e;
    n = std::sqrt(n);
    for (double& e : v) e /= n;
    return v;
  }

  EmbeddingVector embed_key(const std::string& key) const {
    std::vector<double> v = unit_noise(util::key_for(g_.seed, key));
    if (auto cluster = route(key)) {
      std::size_t ci = index_.at(*cluster);
      double disp = g_.clusters[ci].dispersion;
      for (std::size_t d = 0; d < g_.dim; ++d) v[d] = centroids_[ci][d] + disp * v[d];
    }
    double n = 0.0;
    for (double e : v) n += e * e;
    n = std::sqrt(n);
    std::vector<float> f(g_.dim);
    for (std::size_t d = 0; d < g_.dim; ++d) f[d] = static_cast<float>(v[d] / n);
    return EmbeddingVector(std::move(f));
  }

  MockGeometry g_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<double>> centroids_;
};

inline MockGeometry geometry_from_json(const nlohmann::json& j) {
  MockGeometry g;
  try {
    g.dim = j.value("dim", std::size_t{64});
    g.seed = j.value("seed", std::uint64_t{0});
    for (const auto& c : j.value("clusters", nlohmann::json::array())) {
      Cluster cl;
      cl.name = c.at("name").get<std::string>();
      cl.dispersion = c.value("dispersion", 0.0);
      if (c.contains("centroid")) {
        const auto& cs = c["centroid"];
        if (cs.contains("axis")) {
          cl.centroid.kind = CentroidSpec::Kind::axis;
          cl.centroid.axis = cs["axis"].get<std::size_t>();
        } else if (cs.contains("vector")) {
          cl.centroid.kind = CentroidSpec::Kind::vector;
          cl.centroid.values = cs["vector"].get<std::vector<double>>();
        }
      }
      g.clusters.push_back(std::move(cl));
    }
    for (const auto& a : j.value("assignments", nlohmann::json::array())) {
      g.assignments.push_back({a.at("pattern").get<std::string>(), a.at("cluster").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("mock geometry: ") + e.what());
  }
  g.validate();
  return g;
}

inline nlohmann::json to_json(const MockGeometry& g) {
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto& c : g.clusters) {
    nlohmann::json cj{{"name", c.name}, {"dispersion", c.dispersion}};
    if (c.centroid.kind == CentroidSpec::Kind::axis) cj["centroid"] = {{"axis", c.centroid.axis}};
    if (c.centroid.kind == CentroidSpec::Kind::vector) cj["centroid"] = {{"vector", c.centroid.values}};
    clusters.push_back(std::move(cj));
  }
  nlohmann::json assignments = nlohmann::json::array();
  for (const auto& a : g.assignments) assignments.push_back({{"pattern", a.pattern}, {"cluster", a.cluster}});
  return {{"dim", g.dim}, {"seed", g.seed}, {"clusters", clusters}, {"assignments", assignments}};
}

}  // namespace wmaudit
