#pragma once

#include <chrono>
#include <memory>
#include <semaphore>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "wmaudit/error.hpp"

namespace wmaudit::backend {

struct HttpSettings {
  std::string endpoint;  // scheme://host:port
  int timeout_ms = 30000;
  int retries = 3;
  int backoff_ms = 100;  // doubled after every failed attempt
  int max_in_flight = 4;
};

/// JSON-over-HTTP with bounded retries, exponential backoff and a cap on
/// concurrent requests shared by every copy of the transport.
class HttpTransport {
 public:
  explicit HttpTransport(HttpSettings settings)
      : settings_(std::move(settings)),
        slots_(std::make_shared<std::counting_semaphore<1024>>(std::clamp(settings_.max_in_flight, 1, 1024))) {
    if (settings_.endpoint.empty()) fail(ErrorKind::invalid_config, "remote backend endpoint is empty");
    if (settings_.retries < 0) fail(ErrorKind::invalid_config, "retries must be >= 0");
  }

  const HttpSettings& settings() const noexcept { return settings_; }

  nlohmann::json post_json(const std::string& path, const nlohmann::json& body) const {
    return request(path, &body, true);
  }

  nlohmann::json get_json(const std::string& path) const { return request(path, nullptr, true); }

  // Single attempt, transport failures reported as connectivity errors.
  nlohmann::json probe_json(const std::string& path) const { return request(path, nullptr, false); }

 private:
  nlohmann::json request(const std::string& path, const nlohmann::json* body, bool retry) const {
    std::string where = settings_.endpoint + path;
    int attempts = retry ? settings_.retries + 1 : 1;
    int backoff = settings_.backoff_ms;
    std::string last_error;
    for (int attempt = 0; attempt < attempts; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
        backoff *= 2;
      }
      httplib::Result res = [&] {
        slots_->acquire();
        struct Release {
          std::counting_semaphore<1024>* s;
          ~Release() { s->release(); }
        } release{slots_.get()};
        httplib::Client cli(settings_.endpoint);
        auto timeout = std::chrono::milliseconds(settings_.timeout_ms);
        cli.set_connection_timeout(timeout);
        cli.set_read_timeout(timeout);
        cli.set_write_timeout(timeout);
        return body ? cli.Post(path, body->dump(), "application/json") : cli.Get(path);
      }();

      if (!res) {
        last_error = httplib::to_string(res.error());
        if (!retry) fail(ErrorKind::connectivity, "cannot reach " + where + ": " + last_error);
        continue;
      }
      if (res->status >= 200 && res->status < 300) {
        try {
          return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
          throw Error(ErrorKind::backend, where + " returned malformed JSON: " + e.what());
        }
      }
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
      bool transient = res->status >= 500 || res->status == 429;
      if (!transient || !retry) {
        throw Error(ErrorKind::backend, where + " failed with " + last_error, transient);
      }
    }
    throw Error(ErrorKind::backend,
                where + " failed after " + std::to_string(attempts) + " attempt(s): " + last_error, true);
  }

  HttpSettings settings_;
  std::shared_ptr<std::counting_semaphore<1024>> slots_;
};

}  // namespace wmaudit::backend
