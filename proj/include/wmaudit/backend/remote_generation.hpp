#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "wmaudit/backend/generation.hpp"
#include "wmaudit/backend/http.hpp"
#include "wmaudit/backend/remote_embedding.hpp"
#include "wmaudit/corpus/prompts.hpp"

namespace wmaudit {

enum class GenerationProfile {
  native,  // POST /generate {query, images, temperature, top_k, top_p} -> {text}
  chat,    // POST /v1/chat/completions, OpenAI-style messages with image parts
};

inline GenerationProfile parse_profile(std::string_view s) {
  if (s == "native") return GenerationProfile::native;
  if (s == "chat") return GenerationProfile::chat;
  fail(ErrorKind::invalid_config, "unknown generation profile '" + std::string(s) + "'");
}

struct RemoteGeneratorConfig {
  backend::HttpSettings http;
  GenerationProfile profile = GenerationProfile::native;
  std::optional<std::string> model;
  ImagePayloadMode image_mode = ImagePayloadMode::base64;
  // How retrieved images and the query are laid out for chat servers.
  std::string system_prompt = "Answer the question using the provided images.";
  std::string user_template = "{query}";
  std::string image_mime = "image/png";
};

class RemoteGenerator final : public GenerationBackend {
 public:
  explicit RemoteGenerator(RemoteGeneratorConfig cfg) : cfg_(std::move(cfg)), http_(cfg_.http) {}

  std::string generate(const GenerationRequest& request) override {
    request.sampling.validate();
    return cfg_.profile == GenerationProfile::native ? native(request) : chat(request);
  }

  nlohmann::json native_body(const GenerationRequest& r) const {
    nlohmann::json images = nlohmann::json::array();
    for (const auto& ref : r.image_refs) images.push_back(encode_image_payload(ref, cfg_.image_mode));
    nlohmann::json body{{"query", r.query_text},
                        {"images", std::move(images)},
                        {"temperature", r.sampling.temperature},
                        {"top_k", r.sampling.top_k},
                        {"top_p", r.sampling.top_p}};
    if (cfg_.model) body["model"] = *cfg_.model;
    return body;
  }

  nlohmann::json chat_body(const GenerationRequest& r) const {
    nlohmann::json parts = nlohmann::json::array();
    std::string count = std::to_string(r.image_refs.size());
    parts.push_back({{"type", "text"},
                     {"text", substitute(cfg_.user_template, {{"query", r.query_text}, {"num_images", count}})}});
    for (const auto& ref : r.image_refs) {
      std::string url = cfg_.image_mode == ImagePayloadMode::path
                            ? ref
                            : "data:" + cfg_.image_mime + ";base64," + encode_image_payload(ref, ImagePayloadMode::base64);
      parts.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
    }
    nlohmann::json messages = nlohmann::json::array();
    if (!cfg_.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", cfg_.system_prompt}});
    messages.push_back({{"role", "user"}, {"content", std::move(parts)}});
    nlohmann::json body{{"messages", std::move(messages)},
                        {"temperature", r.sampling.temperature},
                        {"top_k", r.sampling.top_k},
                        {"top_p", r.sampling.top_p}};
    if (cfg_.model) body["model"] = *cfg_.model;
    return body;
  }

 private:
  std::string native(const GenerationRequest& r) {
    nlohmann::json resp = http_.post_json("/generate", native_body(r));
    try {
      return resp.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::backend, std::string("malformed /generate response: ") + e.what());
    }
  }

  std::string chat(const GenerationRequest& r) {
    nlohmann::json resp = http_.post_json("/v1/chat/completions", chat_body(r));
    try {
      return resp.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::backend, std::string("malformed chat completion response: ") + e.what());
    }
  }

  RemoteGeneratorConfig cfg_;
  backend::HttpTransport http_;
};

}  // namespace wmaudit
