#pragma once

#include <cstring>
#include <filesystem>
#include <string>

#include <png.h>

#include "wmaudit/error.hpp"
#include "wmaudit/transforms/raster.hpp"

namespace wmaudit {

// PNG in/out through libpng's simplified API. Images load as RGB, or RGBA
// when the file carries an alpha channel.
inline RasterImage read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    fail(ErrorKind::io, "cannot read PNG '" + path.string() + "': " + image.message);
  }
  bool alpha = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  image.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  RasterImage out(static_cast<int>(image.width), static_cast<int>(image.height), alpha ? 4 : 3);
  if (!png_image_finish_read(&image, nullptr, out.data.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorKind::io, "cannot decode PNG '" + path.string() + "': " + msg);
  }
  return out;
}

inline void write_png(const RasterImage& img, const std::filesystem::path& path) {
  img.validate();
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = img.channels == 4 ? PNG_FORMAT_RGBA : (img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY);
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.data.data(), 0, nullptr)) {
    fail(ErrorKind::io, "cannot write PNG '" + path.string() + "': " + image.message);
  }
}

}  // namespace wmaudit
