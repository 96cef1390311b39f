#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <gtest/gtest.h>

#include "wmaudit.hpp"

namespace wmtest {

// Fails the test unless `stmt` throws wmaudit::Error of `kind`.
#define EXPECT_WM_ERROR(stmt, expected_kind)                                              \
  do {                                                                                    \
    try {                                                                                 \
      stmt;                                                                               \
      ADD_FAILURE() << "no error thrown by " #stmt;                                       \
    } catch (const wmaudit::Error& e_) {                                                  \
      EXPECT_EQ(e_.kind(), expected_kind) << e_.what();                                   \
    }                                                                                     \
  } while (0)

// Message of the wmaudit::Error thrown by `fn`, or "" when nothing is thrown.
template <class Fn>
std::string error_message(Fn&& fn) {
  try {
    fn();
  } catch (const wmaudit::Error& e) {
    return e.what();
  }
  return {};
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("wmaudit-unit-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

inline wmaudit::EmbeddingVector vec(std::vector<float> v) { return wmaudit::EmbeddingVector(std::move(v)); }

inline wmaudit::EmbeddingVector random_vec(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<float> n;
  std::vector<float> v(dim);
  for (;;) {
    double sq = 0.0;
    for (auto& x : v) {
      x = n(rng);
      sq += x * x;
    }
    if (sq > 0.0) return wmaudit::EmbeddingVector(v);
  }
}

inline wmaudit::WatermarkSpec acronym_spec(const std::string& id, const std::string& acronym,
                                           const std::string& signature, std::size_t probes = 2,
                                           const std::string& asset = {}) {
  wmaudit::WatermarkSpec s;
  s.id = id;
  s.method = wmaudit::WatermarkMethod::acronym;
  s.signature = signature;
  s.acronym = acronym;
  s.asset_ref = asset.empty() ? id + ".png" : asset;
  for (std::size_t i = 0; i < probes; ++i) {
    s.probes.push_back(wmaudit::make_probe("Background: " + acronym + " is thing " + std::to_string(i) + ".",
                                           "What is the full name of " + acronym + "?"));
  }
  return s;
}

/// 8-bit RGB image with a distinct pattern, written as PNG.
inline void write_test_png(const std::filesystem::path& p, int w, int h, int seed) {
  wmaudit::RasterImage img(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<std::uint8_t>((x * 7 + y * 13 + c * 31 + seed * 17) % 256);
    }
  }
  std::filesystem::create_directories(p.parent_path());
  wmaudit::write_png(img, p);
}

}  // namespace wmtest
