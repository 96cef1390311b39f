#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmaudit/error.hpp"
#include "wmaudit/transforms/raster.hpp"

namespace wmaudit {

// Resampling works directly on stored sample values (no gamma linearization).

namespace detail {

template <class Sample>
double bilinear(const BasicRaster<Sample>& img, double u, double v, int c) {
  u = std::clamp(u, 0.0, static_cast<double>(img.width - 1));
  v = std::clamp(v, 0.0, static_cast<double>(img.height - 1));
  int x0 = static_cast<int>(std::floor(u));
  int y0 = static_cast<int>(std::floor(v));
  int x1 = std::min(x0 + 1, img.width - 1);
  int y1 = std::min(y0 + 1, img.height - 1);
  double fx = u - x0;
  double fy = v - y0;
  double top = img.at(x0, y0, c) * (1.0 - fx) + img.at(x1, y0, c) * fx;
  double bottom = img.at(x0, y1, c) * (1.0 - fx) + img.at(x1, y1, c) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

}  // namespace detail

/// Bilinear rescale; output dims are round(factor * dims), at least 1.
template <class Sample>
BasicRaster<Sample> rescale(const BasicRaster<Sample>& img, double factor) {
  img.validate();
  if (!(factor > 0.0) || !std::isfinite(factor)) fail(ErrorKind::invalid_input, "scale factor must be positive");
  int w = std::max(1, static_cast<int>(std::lround(factor * img.width)));
  int h = std::max(1, static_cast<int>(std::lround(factor * img.height)));
  BasicRaster<Sample> out(w, h, img.channels);
  double sx = static_cast<double>(img.width) / w;
  double sy = static_cast<double>(img.height) / h;
  for (int y = 0; y < h; ++y) {
    double v = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < w; ++x) {
      double u = (x + 0.5) * sx - 0.5;
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = detail::to_sample<Sample>(detail::bilinear(img, u, v, c));
    }
  }
  return out;
}

using Background = std::array<double, 4>;
inline constexpr Background kBlack = {0.0, 0.0, 0.0, 255.0};

namespace detail {

template <class Sample>
BasicRaster<Sample> quarter_turn_cw(const BasicRaster<Sample>& img) {
  BasicRaster<Sample> out(img.height, img.width, img.channels);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(y, img.height - 1 - x, c);
  return out;
}

// ceil() that ignores floating-point noise just above an integer.
inline int snug_ceil(double v) { return static_cast<int>(std::ceil(v - 1e-9)); }

}  // namespace detail

/// Clockwise rotation onto a canvas grown to the rotated bounding box.
/// Multiples of 90 degrees are exact pixel permutations.
template <class Sample>
BasicRaster<Sample> rotate(const BasicRaster<Sample>& img, double degrees_cw, const Background& fill = kBlack) {
  img.validate();
  if (!std::isfinite(degrees_cw)) fail(ErrorKind::invalid_input, "rotation angle must be finite");
  double turns = degrees_cw / 90.0;
  if (turns == std::floor(turns)) {
    long q = static_cast<long>(std::fmod(turns, 4.0));
    if (q < 0) q += 4;
    BasicRaster<Sample> out = img;
    for (long i = 0; i < q; ++i) out = detail::quarter_turn_cw(out);
    return out;
  }

  double theta = degrees_cw * std::numbers::pi / 180.0;
  double cs = std::cos(theta);
  double sn = std::sin(theta);
  int w = detail::snug_ceil(img.width * std::fabs(cs) + img.height * std::fabs(sn));
  int h = detail::snug_ceil(img.width * std::fabs(sn) + img.height * std::fabs(cs));
  BasicRaster<Sample> out(w, h, img.channels);
  double ocx = w / 2.0, ocy = h / 2.0;
  double icx = img.width / 2.0, icy = img.height / 2.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double dx = x + 0.5 - ocx;
      double dy = y + 0.5 - ocy;
      // Inverse of the clockwise (y-down) rotation.
      double sx = dx * cs + dy * sn;
      double sy = -dx * sn + dy * cs;
      double u = sx + icx - 0.5;
      double v = sy + icy - 0.5;
      bool inside = u >= -0.5 && u <= img.width - 0.5 && v >= -0.5 && v <= img.height - 0.5;
      for (int c = 0; c < img.channels; ++c) {
        double value = inside ? detail::bilinear(img, u, v, c) : fill[static_cast<std::size_t>(std::min(c, 3))];
        out.at(x, y, c) = detail::to_sample<Sample>(value);
      }
    }
  }
  return out;
}

/// Normalized Gaussian taps for sigma, truncated at 3 sigma.
inline std::vector<double> gaussian_kernel(double sigma) {
  int half = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * half + 1));
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    double w = std::exp(-(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + half)] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

/// Separable Gaussian blur with sigma = radius and clamped edges.
template <class Sample>
BasicRaster<Sample> gaussian_blur(const BasicRaster<Sample>& img, double radius) {
  img.validate();
  if (!(radius >= 0.0) || !std::isfinite(radius)) fail(ErrorKind::invalid_input, "blur radius must be >= 0");
  if (radius == 0.0) return img;
  auto k = gaussian_kernel(radius);
  int half = static_cast<int>(k.size() / 2);
  const int w = img.width, h = img.height, ch = img.channels;

  std::vector<double> tmp(img.data.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int i = -half; i <= half; ++i) {
          int xx = std::clamp(x + i, 0, w - 1);
          acc += k[static_cast<std::size_t>(i + half)] * img.at(xx, y, c);
        }
        tmp[img.index(x, y, c)] = acc;
      }

  BasicRaster<Sample> out(w, h, ch);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int i = -half; i <= half; ++i) {
          int yy = std::clamp(y + i, 0, h - 1);
          acc += k[static_cast<std::size_t>(i + half)] * tmp[img.index(x, yy, c)];
        }
        out.at(x, y, c) = detail::to_sample<Sample>(acc);
      }
  return out;
}

enum class TransformKind { rescale, rotate, gaussian, compose };

struct TransformSpec {
  TransformKind kind = TransformKind::rescale;
  double factor = 1.0;    // rescale
  double degrees = 0.0;   // rotate, clockwise
  double radius = 0.0;    // gaussian sigma
  Background fill = kBlack;
  std::vector<TransformSpec> children;  // compose

  static TransformSpec make_rescale(double f) { return {TransformKind::rescale, f, 0, 0, kBlack, {}}; }
  static TransformSpec make_rotate(double deg, Background bg = kBlack) {
    return {TransformKind::rotate, 1, deg, 0, bg, {}};
  }
  static TransformSpec make_gaussian(double r) { return {TransformKind::gaussian, 1, 0, r, kBlack, {}}; }
  static TransformSpec make_compose(std::vector<TransformSpec> c) {
    return {TransformKind::compose, 1, 0, 0, kBlack, std::move(c)};
  }
};

inline void validate(const TransformSpec& s) {
  switch (s.kind) {
    case TransformKind::rescale:
      if (!(s.factor > 0.0)) fail(ErrorKind::invalid_input, "rescale factor must be > 0");
      break;
    case TransformKind::gaussian:
      if (!(s.radius >= 0.0)) fail(ErrorKind::invalid_input, "blur radius must be >= 0");
      break;
    case TransformKind::rotate:
      if (!std::isfinite(s.degrees)) fail(ErrorKind::invalid_input, "rotation angle must be finite");
      break;
    case TransformKind::compose:
      for (const auto& c : s.children) validate(c);
      break;
  }
}

template <class Sample>
BasicRaster<Sample> apply(const BasicRaster<Sample>& img, const TransformSpec& spec);

/// Left-to-right application. Failures are rethrown with the stage index.
template <class Sample>
BasicRaster<Sample> compose(const BasicRaster<Sample>& img, const std::vector<TransformSpec>& specs) {
  BasicRaster<Sample> cur = img;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    try {
      cur = apply(cur, specs[i]);
    } catch (const Error& e) {
      throw Error(e.kind(), "transform stage " + std::to_string(i) + ": " + e.what());
    }
  }
  return cur;
}

template <class Sample>
BasicRaster<Sample> apply(const BasicRaster<Sample>& img, const TransformSpec& spec) {
  switch (spec.kind) {
    case TransformKind::rescale: return rescale(img, spec.factor);
    case TransformKind::rotate: return rotate(img, spec.degrees, spec.fill);
    case TransformKind::gaussian: return gaussian_blur(img, spec.radius);
    case TransformKind::compose: return compose(img, spec.children);
  }
  return img;
}

/// Named robustness conditions: rescale x1.5, rotate 45 degrees clockwise,
/// Gaussian blur radius 3.0, and all three in that order.
inline std::vector<TransformSpec> named_condition(std::string_view name) {
  if (name == "rescale") return {TransformSpec::make_rescale(1.5)};
  if (name == "rotate") return {TransformSpec::make_rotate(45.0)};
  if (name == "gaussian") return {TransformSpec::make_gaussian(3.0)};
  if (name == "combined") {
    return {TransformSpec::make_rescale(1.5), TransformSpec::make_rotate(45.0), TransformSpec::make_gaussian(3.0)};
  }
  fail(ErrorKind::invalid_config, "unknown transform condition '" + std::string(name) + "'");
}

inline TransformSpec transform_from_json(const nlohmann::json& j) {
  try {
    std::string kind = j.at("kind").get<std::string>();
    TransformSpec s;
    if (kind == "rescale") {
      s = TransformSpec::make_rescale(j.at("factor").get<double>());
    } else if (kind == "rotate") {
      Background bg = kBlack;
      if (j.contains("fill")) {
        auto f = j["fill"].get<std::vector<double>>();
        for (std::size_t i = 0; i < std::min<std::size_t>(4, f.size()); ++i) bg[i] = f[i];
      }
      s = TransformSpec::make_rotate(j.at("degrees").get<double>(), bg);
    } else if (kind == "gaussian") {
      s = TransformSpec::make_gaussian(j.at("radius").get<double>());
    } else if (kind == "compose") {
      std::vector<TransformSpec> children;
      for (const auto& c : j.at("children")) children.push_back(transform_from_json(c));
      s = TransformSpec::make_compose(std::move(children));
    } else {
      fail(ErrorKind::invalid_config, "unknown transform kind '" + kind + "'");
    }
    validate(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("transform spec: ") + e.what());
  }
}

// Accepts a condition name, a single spec object, or an array mixing both.
inline std::vector<TransformSpec> pipeline_from_json(const nlohmann::json& j) {
  if (j.is_string()) return named_condition(j.get<std::string>());
  if (j.is_object()) return {transform_from_json(j)};
  std::vector<TransformSpec> out;
  for (const auto& e : j) {
    auto part = pipeline_from_json(e);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

}  // namespace wmaudit
