#pragma once

#include <fstream>
#include <iterator>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmaudit/backend/embedding.hpp"
#include "wmaudit/backend/http.hpp"
#include "wmaudit/util/hash.hpp"

namespace wmaudit {

enum class ImagePayloadMode { base64, path };

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot read asset '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string encode_image_payload(const std::string& asset_ref, ImagePayloadMode mode) {
  return mode == ImagePayloadMode::path ? asset_ref : util::base64_encode(read_file_bytes(asset_ref));
}

struct RemoteEmbedderConfig {
  backend::HttpSettings http;
  std::optional<std::string> model;
  std::size_t batch_size = 32;
  std::size_t expected_dim = 0;  // 0 = learn from the first response
  ImagePayloadMode image_mode = ImagePayloadMode::base64;
};

struct HealthStatus {
  bool ok = false;
  std::string model;
  std::size_t dim = 0;
  std::vector<std::string> warnings;
};

inline constexpr std::string_view kReferenceRetrieverModel = "openai/clip-vit-large-patch14";

/// Client for POST /embed {modality, inputs, model?} -> {embeddings, dim, model}
/// and GET /health -> {model, dim}.
class RemoteEmbedder final : public EmbeddingBackend {
 public:
  explicit RemoteEmbedder(RemoteEmbedderConfig cfg) : cfg_(std::move(cfg)), http_(cfg_.http) {
    if (cfg_.batch_size == 0) fail(ErrorKind::invalid_config, "batch_size must be >= 1");
  }

  std::size_t dim() const override {
    std::lock_guard lock(mu_);
    return cfg_.expected_dim;
  }
  std::string model() const override {
    std::lock_guard lock(mu_);
    return cfg_.model.value_or(reported_model_);
  }

  std::vector<EmbeddingVector> embed(const EmbedRequest& request) override {
    request.validate();
    std::vector<EmbeddingVector> out;
    out.reserve(request.inputs.size());
    for (std::size_t start = 0; start < request.inputs.size(); start += cfg_.batch_size) {
      std::size_t end = std::min(request.inputs.size(), start + cfg_.batch_size);
      nlohmann::json inputs = nlohmann::json::array();
      for (std::size_t i = start; i < end; ++i) {
        inputs.push_back(request.modality == Modality::image ? encode_image_payload(request.inputs[i], cfg_.image_mode)
                                                             : request.inputs[i]);
      }
      nlohmann::json body{{"modality", to_string(request.modality)}, {"inputs", std::move(inputs)}};
      if (cfg_.model) body["model"] = *cfg_.model;
      nlohmann::json resp = http_.post_json("/embed", body);
      append_batch(resp, end - start, out);
    }
    return out;
  }

  /// Fails with invalid-config when the server's dim differs from expected_dim.
  HealthStatus healthcheck() {
    nlohmann::json j = http_.probe_json("/health");
    HealthStatus s;
    try {
      s.model = j.at("model").get<std::string>();
      s.dim = j.at("dim").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::backend, cfg_.http.endpoint + "/health returned an unexpected body: " + e.what());
    }
    if (std::size_t want = dim(); want != 0 && s.dim != want) {
      fail(ErrorKind::invalid_config, "embedding server " + cfg_.http.endpoint + " reports dim " +
                                          std::to_string(s.dim) + " but the index uses dim " +
                                          std::to_string(want));
    }
    if (s.model != kReferenceRetrieverModel) {
      s.warnings.push_back("retriever model '" + s.model + "' differs from " + std::string(kReferenceRetrieverModel) +
                           "; audit behavior under other retrievers is uncharacterized");
    }
    std::lock_guard lock(mu_);
    reported_model_ = s.model;
    s.ok = true;
    return s;
  }

 private:
  void append_batch(const nlohmann::json& resp, std::size_t expected, std::vector<EmbeddingVector>& out) {
    std::vector<std::vector<float>> rows;
    std::size_t dim = 0;
    try {
      dim = resp.at("dim").get<std::size_t>();
      for (const auto& row : resp.at("embeddings")) rows.push_back(row.get<std::vector<float>>());
      if (resp.contains("model")) {
        std::lock_guard lock(mu_);
        reported_model_ = resp["model"].get<std::string>();
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::backend, "malformed /embed response: " + std::string(e.what()));
    }
    if (rows.size() != expected) {
      fail(ErrorKind::backend, "/embed returned " + std::to_string(rows.size()) + " vectors for " +
                                   std::to_string(expected) + " inputs");
    }
    std::size_t want = 0;
    {
      std::lock_guard lock(mu_);
      if (cfg_.expected_dim == 0) cfg_.expected_dim = dim;
      want = cfg_.expected_dim;
    }
    if (dim != want) {
      fail(ErrorKind::invalid_config, "embedding server dim " + std::to_string(dim) + " disagrees with index dim " +
                                          std::to_string(want));
    }
    for (auto& r : rows) {
      if (r.size() != dim) fail(ErrorKind::backend, "/embed returned a vector of the wrong length");
      out.emplace_back(std::move(r));
    }
  }

  RemoteEmbedderConfig cfg_;
  backend::HttpTransport http_;
  std::string reported_model_;
  mutable std::mutex mu_;
};

}  // namespace wmaudit
