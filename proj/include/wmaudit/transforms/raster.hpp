#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>
#include <vector>

#include "wmaudit/error.hpp"

namespace wmaudit {

/// Row-major interleaved raster. `Sample` is std::uint8_t for real images;
/// float rasters are used where 8-bit quantization would hide the math.
template <class Sample>
struct BasicRaster {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<Sample> data;

  BasicRaster() = default;
  BasicRaster(int w, int h, int c, Sample fill = Sample{}) : width(w), height(h), channels(c) {
    validate_shape();
    data.assign(static_cast<std::size_t>(w) * h * c, fill);
  }

  void validate_shape() const {
    if (width <= 0 || height <= 0) fail(ErrorKind::invalid_input, "raster dimensions must be positive");
    if (channels != 3 && channels != 4 && channels != 1) {
      fail(ErrorKind::invalid_input, "raster must have 1, 3 or 4 channels");
    }
  }

  void validate() const {
    validate_shape();
    if (data.size() != static_cast<std::size_t>(width) * height * channels) {
      fail(ErrorKind::invalid_input, "raster data length does not match width*height*channels");
    }
  }

  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  Sample& at(int x, int y, int c) noexcept { return data[index(x, y, c)]; }
  const Sample& at(int x, int y, int c) const noexcept { return data[index(x, y, c)]; }

  friend bool operator==(const BasicRaster&, const BasicRaster&) = default;
};

using RasterImage = BasicRaster<std::uint8_t>;
using FloatRaster = BasicRaster<float>;

namespace detail {

template <class Sample>
Sample to_sample(double v) {
  if constexpr (std::is_same_v<Sample, std::uint8_t>) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  } else {
    return static_cast<Sample>(v);
  }
}

}  // namespace detail

}  // namespace wmaudit
