#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"

using namespace wmaudit;

namespace {

RasterImage noise_image(int w, int h, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RasterImage img(w, h, channels);
  for (auto& s : img.data) s = static_cast<std::uint8_t>(rng() % 256);
  return img;
}

// Gray disk with a linear edge ramp, centred in a w x w canvas.
RasterImage smooth_disk(int w, double radius, double ramp) {
  RasterImage img(w, w, 3);
  double c = w / 2.0;
  for (int y = 0; y < w; ++y) {
    for (int x = 0; x < w; ++x) {
      double r = std::hypot(x + 0.5 - c, y + 0.5 - c);
      double v = std::clamp((radius + ramp / 2 - r) / ramp, 0.0, 1.0) * 200.0;
      for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = static_cast<std::uint8_t>(std::lround(v));
    }
  }
  return img;
}

}  // namespace

TEST(Rescale, OneAndAHalf) {
  RasterImage out = rescale(RasterImage(100, 100, 3), 1.5);
  EXPECT_EQ(out.width, 150);
  EXPECT_EQ(out.height, 150);
}

TEST(Rescale, UnitFactorIsIdentity) {
  RasterImage img = noise_image(37, 23, 3, 1);
  EXPECT_EQ(rescale(img, 1.0), img);
}

TEST(Rescale, ConstantStaysConstant) {
  for (double f : {0.3, 0.77, 1.5, 2.0, 3.3}) {
    RasterImage out = rescale(RasterImage(40, 30, 3, 123), f);
    for (auto s : out.data) EXPECT_EQ(s, 123);
  }
}

TEST(Rescale, MinimumOnePixel) {
  RasterImage out = rescale(RasterImage(10, 10, 3), 0.001);
  EXPECT_EQ(out.width, 1);
  EXPECT_EQ(out.height, 1);
}

TEST(Rescale, RoundTripDimsWithinOnePixel) {
  for (double f : {0.37, 0.5, 0.9, 1.3, 1.5, 2.7}) {
    for (int w : {7, 64, 101}) {
      RasterImage back = rescale(rescale(RasterImage(w, w + 3, 3), f), 1.0 / f);
      EXPECT_LE(std::abs(back.width - w), 1) << f << ' ' << w;
      EXPECT_LE(std::abs(back.height - (w + 3)), 1) << f << ' ' << w;
    }
  }
}

TEST(Rescale, InvalidFactor) {
  EXPECT_WM_ERROR(rescale(RasterImage(4, 4, 3), 0.0), ErrorKind::invalid_input);
  EXPECT_WM_ERROR(rescale(RasterImage(4, 4, 3), -1.0), ErrorKind::invalid_input);
}

TEST(Rotate, FortyFiveDegreeBoundingBox) {
  for (auto [w, h] : {std::pair{100, 100}, std::pair{64, 30}, std::pair{150, 150}}) {
    RasterImage out = rotate(RasterImage(w, h, 3), 45.0);
    int expect = static_cast<int>(std::ceil((w + h) / std::numbers::sqrt2 - 1e-9));
    EXPECT_EQ(out.width, expect);
    EXPECT_EQ(out.height, expect);
  }
}

TEST(Rotate, FourQuarterTurnsIsIdentity) {
  RasterImage img = noise_image(31, 17, 4, 2);
  RasterImage r = img;
  for (int i = 0; i < 4; ++i) r = rotate(r, 90.0);
  EXPECT_EQ(r, img);
  RasterImage q = rotate(img, 90.0);
  EXPECT_EQ(q.width, 17);
  EXPECT_EQ(q.height, 31);
  // Clockwise: the top-left pixel moves to the top-right corner.
  EXPECT_EQ(q.at(16, 0, 0), img.at(0, 0, 0));
  EXPECT_EQ(rotate(img, -90.0), rotate(img, 270.0));
}

TEST(Rotate, ForthAndBackOnDisk) {
  // 101 keeps both canvas growths centred on whole pixels.
  RasterImage img = smooth_disk(101, 30.0, 4.0);
  RasterImage back = rotate(rotate(img, 45.0), -45.0);
  int off = (back.width - img.width) / 2;
  ASSERT_EQ((back.width - img.width) % 2, 0);
  double err = 0.0;
  int n = 0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (std::hypot(x + 0.5 - 50.5, y + 0.5 - 50.5) > 34.0) continue;
      for (int c = 0; c < 3; ++c) {
        err += std::abs(static_cast<int>(back.at(x + off, y + off, c)) - static_cast<int>(img.at(x, y, c)));
        ++n;
      }
    }
  }
  EXPECT_LE(err / n, 2.0) << "mean absolute error in 8-bit steps";
}

TEST(Rotate, CornersUseBackground) {
  RasterImage out = rotate(RasterImage(20, 20, 3, 255), 45.0, Background{10, 20, 30, 255});
  EXPECT_EQ(out.at(0, 0, 0), 10);
  EXPECT_EQ(out.at(0, 0, 1), 20);
  EXPECT_EQ(out.at(0, 0, 2), 30);
  EXPECT_EQ(out.at(out.width / 2, out.height / 2, 0), 255);
  EXPECT_EQ(rotate(RasterImage(20, 20, 3, 255), 45.0).at(0, 0, 0), 0);
}

TEST(Gaussian, ZeroRadiusIsIdentity) {
  RasterImage img = noise_image(20, 20, 3, 3);
  EXPECT_EQ(gaussian_blur(img, 0.0), img);
}

TEST(Gaussian, ConstantUnchanged) {
  RasterImage out = gaussian_blur(RasterImage(30, 25, 4, 77), 3.0);
  for (auto s : out.data) EXPECT_EQ(s, 77);
}

TEST(Gaussian, KernelTruncatedAndNormalized) {
  auto k = gaussian_kernel(3.0);
  EXPECT_EQ(k.size(), 19u);
  double sum = 0.0;
  for (double w : k) sum += w;
  EXPECT_NEAR(sum, 1.0, 1e-15);
}

TEST(Gaussian, ImpulseMatchesAnalyticKernel) {
  FloatRaster img(41, 41, 1, 0.0f);
  img.at(20, 20, 0) = 1.0f;
  FloatRaster out = gaussian_blur(img, 3.0);
  // Truncated at 3 sigma and renormalized per axis.
  double norm = 0.0;
  for (int i = -9; i <= 9; ++i) norm += std::exp(-i * i / 18.0);
  for (int y = 0; y < 41; ++y) {
    for (int x = 0; x < 41; ++x) {
      int dx = x - 20, dy = y - 20;
      double expect = std::abs(dx) <= 9 && std::abs(dy) <= 9
                          ? std::exp(-(dx * dx + dy * dy) / 18.0) / (norm * norm)
                          : 0.0;
      EXPECT_NEAR(out.at(x, y, 0), expect, 1e-3);
    }
  }
}

TEST(Gaussian, MeanPreservedWithConstantBorder) {
  RasterImage img(60, 60, 3, 50);
  for (int y = 20; y < 40; ++y) {
    for (int x = 20; x < 40; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<std::uint8_t>(100 + (x * y + c) % 100);
    }
  }
  auto mean = [](const RasterImage& r) {
    double s = 0.0;
    for (auto v : r.data) s += v;
    return s / static_cast<double>(r.data.size());
  };
  EXPECT_NEAR(mean(gaussian_blur(img, 3.0)), mean(img), 1.0);
}

TEST(Gaussian, NegativeRadiusRejected) {
  EXPECT_WM_ERROR(gaussian_blur(RasterImage(4, 4, 3), -1.0), ErrorKind::invalid_input);
}

TEST(Compose, EmptyIsIdentity) {
  RasterImage img = noise_image(9, 9, 3, 4);
  EXPECT_EQ(compose(img, {}), img);
}

TEST(Compose, SingletonBitExact) {
  RasterImage img = noise_image(33, 21, 3, 5);
  EXPECT_EQ(compose(img, {TransformSpec::make_rotate(30.0)}), rotate(img, 30.0));
  EXPECT_EQ(compose(img, {TransformSpec::make_rescale(0.7)}), rescale(img, 0.7));
  EXPECT_EQ(compose(img, {TransformSpec::make_gaussian(1.5)}), gaussian_blur(img, 1.5));
}

TEST(Compose, CombinedConditionGeometry) {
  RasterImage out = compose(RasterImage(100, 100, 3, 200), named_condition("combined"));
  EXPECT_EQ(out.width, 213);
  EXPECT_EQ(out.height, 213);
  EXPECT_EQ(out.channels, 3);
}

TEST(Compose, ErrorsNameStage) {
  std::vector<TransformSpec> p{TransformSpec::make_rescale(1.5), TransformSpec::make_gaussian(-2.0)};
  std::string msg = wmtest::error_message([&] { compose(RasterImage(8, 8, 3), p); });
  EXPECT_NE(msg.find("stage 1"), std::string::npos) << msg;
}

TEST(Compose, PreservesChannelCount) {
  for (int ch : {3, 4}) {
    RasterImage out = compose(noise_image(20, 20, ch, 6), named_condition("combined"));
    EXPECT_EQ(out.channels, ch);
    EXPECT_EQ(out.data.size(), static_cast<std::size_t>(out.width) * out.height * ch);
  }
}

TEST(Pipeline, FromJson) {
  auto p = pipeline_from_json(nlohmann::json::parse(
      R"(["rescale", {"kind":"rotate","degrees":45,"fill":[255,255,255]}, {"kind":"gaussian","radius":3}])"));
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[1].kind, TransformKind::rotate);
  EXPECT_DOUBLE_EQ(p[1].fill[0], 255.0);
  EXPECT_WM_ERROR(named_condition("jpeg"), ErrorKind::invalid_config);
  EXPECT_WM_ERROR(transform_from_json(nlohmann::json::parse(R"({"kind":"rescale","factor":0})")),
                  ErrorKind::invalid_input);
  EXPECT_WM_ERROR(transform_from_json(nlohmann::json::parse(R"({"kind":"rescale"})")), ErrorKind::parse);
}

TEST(Png, RoundTrip) {
  wmtest::TempDir dir;
  for (int ch : {3, 4}) {
    RasterImage img = noise_image(13, 7, ch, 7);
    write_png(img, dir / "x.png");
    EXPECT_EQ(read_png(dir / "x.png"), img);
  }
  EXPECT_WM_ERROR(read_png(dir / "missing.png"), ErrorKind::io);
}

TEST(Raster, ShapeValidation) {
  EXPECT_WM_ERROR(RasterImage(0, 5, 3), ErrorKind::invalid_input);
  EXPECT_WM_ERROR(RasterImage(5, 5, 2), ErrorKind::invalid_input);
  RasterImage bad(2, 2, 3);
  bad.data.pop_back();
  EXPECT_WM_ERROR(bad.validate(), ErrorKind::invalid_input);
}
