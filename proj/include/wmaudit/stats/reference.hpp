#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "wmaudit/corpus/watermark.hpp"
#include "wmaudit/error.hpp"
#include "wmaudit/stats/summary.hpp"

namespace wmaudit::stats {

enum class ReferenceLabel { clean, watermarked };

inline constexpr std::size_t kDefaultAssumedN = 512;

/// Pre-characterized VSR distribution of a clean or watermarked service.
/// Only (mean, variance) are published, so the sample size is an assumption.
struct ReferenceDistribution {
  ReferenceLabel label = ReferenceLabel::clean;
  WatermarkMethod method = WatermarkMethod::acronym;
  double mean = 0.0;
  double variance = 0.0;
  std::size_t assumed_n = kDefaultAssumedN;

  SummaryStats as_summary() const {
    SummaryStats s{mean, variance, assumed_n};
    s.validate();
    return s;
  }
};

struct ReferencePair {
  WatermarkMethod method = WatermarkMethod::acronym;
  ReferenceDistribution clean;
  ReferenceDistribution watermarked;
};

inline ReferencePair make_reference_pair(WatermarkMethod method, double clean_mean, double clean_var,
                                         double wm_mean, double wm_var,
                                         std::size_t assumed_n = kDefaultAssumedN) {
  return {method,
          {ReferenceLabel::clean, method, clean_mean, clean_var, assumed_n},
          {ReferenceLabel::watermarked, method, wm_mean, wm_var, assumed_n}};
}

// Example reference distributions characterized for the two watermark methods.
inline ReferencePair acronym_preset(std::size_t assumed_n = kDefaultAssumedN) {
  return make_reference_pair(WatermarkMethod::acronym, 0.005, 0.02, 0.6, 0.2, assumed_n);
}

inline ReferencePair spatial_preset(std::size_t assumed_n = kDefaultAssumedN) {
  return make_reference_pair(WatermarkMethod::spatial, 0.2, 0.2, 0.55, 0.25, assumed_n);
}

inline ReferencePair preset(std::string_view name, std::size_t assumed_n = kDefaultAssumedN) {
  if (name == "acronym") return acronym_preset(assumed_n);
  if (name == "spatial") return spatial_preset(assumed_n);
  fail(ErrorKind::invalid_config, "unknown reference preset '" + std::string(name) + "'");
}

// {method, clean: {mean, variance}, watermarked: {mean, variance}, assumed_n}
inline ReferencePair reference_from_json(const nlohmann::json& j) {
  try {
    auto method = parse_method(j.at("method").get<std::string>());
    std::size_t n = j.value("assumed_n", kDefaultAssumedN);
    auto pair = make_reference_pair(method, j.at("clean").at("mean").get<double>(),
                                    j.at("clean").at("variance").get<double>(),
                                    j.at("watermarked").at("mean").get<double>(),
                                    j.at("watermarked").at("variance").get<double>(), n);
    pair.clean.as_summary();
    pair.watermarked.as_summary();
    return pair;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("reference distribution: ") + e.what());
  }
}

inline nlohmann::json to_json(const ReferencePair& p) {
  return {{"method", to_string(p.method)},
          {"clean", {{"mean", p.clean.mean}, {"variance", p.clean.variance}}},
          {"watermarked", {{"mean", p.watermarked.mean}, {"variance", p.watermarked.variance}}},
          {"assumed_n", p.clean.assumed_n}};
}

inline ReferencePair load_reference(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open reference file '" + path.string() + "'");
  try {
    return reference_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::parse, std::string("reference file: ") + e.what());
  }
}

}  // namespace wmaudit::stats
