#include <gtest/gtest.h>
#include <png.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>

#include "hatlsd/gradient.hpp"
#include "hatlsd/image.hpp"
#include "hatlsd/rng.hpp"

using namespace hatlsd;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "hatlsd_test_raster";
  fs::create_directories(dir);
  return dir / name;
}

GrayImage from_fn(int w, int h, auto&& fn) {
  std::vector<double> v;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) v.push_back(fn(x, y));
  return {w, h, std::move(v)};
}

GrayImage random_image(Rng& r, int w, int h) {
  return from_fn(w, h, [&](int, int) { return std::floor(r.uniform() * 256.0); });
}

}  // namespace

TEST(GrayImage, RejectsOutOfRangeValues) {
  EXPECT_THROW(GrayImage(2, 2, 256.0), ParamError);
  EXPECT_THROW(GrayImage(2, 2, std::vector<double>{0, 1, NAN, 3}), ParamError);
  EXPECT_THROW(GrayImage(2, 2, std::vector<double>{0, 1, 2}), ParamError);
}

TEST(ImageIo, PgmRoundTripConstant) {
  const GrayImage img(16, 16, 128.0);
  const auto p = scratch("c128.pgm");
  save_image(img, p);
  EXPECT_EQ(load_image(p), img);
}

TEST(ImageIo, PgmRoundTripRandomIsLossless) {
  Rng r(3);
  const GrayImage img = random_image(r, 33, 17);
  const auto p = scratch("rand.pgm");
  save_image(img, p);
  EXPECT_EQ(load_image(p), img);
}

TEST(ImageIo, PngGrayRoundTrip) {
  Rng r(4);
  const GrayImage img = random_image(r, 20, 9);
  const auto p = scratch("rand.png");
  save_image(img, p);
  EXPECT_EQ(load_image(p), img);
}

TEST(ImageIo, RgbPngConvertedByLuma) {
  // Written with libpng directly so the reader is checked against an
  // independent encoder.
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = 2;
  image.height = 1;
  image.format = PNG_FORMAT_RGB;
  const unsigned char px[6] = {255, 0, 0, 0, 0, 255};
  const auto p = scratch("red.png");
  ASSERT_TRUE(png_image_write_to_file(&image, p.c_str(), 0, px, 0, nullptr));
  const GrayImage g = load_image(p);
  EXPECT_NEAR(g(0, 0), 0.299 * 255, 1e-9);
  EXPECT_NEAR(g(0, 0), 76.2, 0.05);
  EXPECT_NEAR(g(1, 0), 0.114 * 255, 1e-9);
}

TEST(ImageIo, TruncatedPgmIsError) {
  const GrayImage img(16, 16, 7.0);
  auto bytes = detail::encode_pgm(img);
  bytes.resize(bytes.size() - 10);
  EXPECT_THROW(detail::decode_pgm(bytes), FormatError);
  const auto p = scratch("trunc.pgm");
  detail::write_file(p, bytes);
  EXPECT_THROW(load_image(p), FormatError);
}

TEST(ImageIo, MalformedAndMissing) {
  const std::string junk = "P2\n2 2\n255\n0 0 0 0\n";
  EXPECT_THROW(detail::decode_pgm(std::span(reinterpret_cast<const unsigned char*>(junk.data()), junk.size())),
               FormatError);
  const std::string deep = "P5\n2 2\n65535\n";
  EXPECT_THROW(detail::decode_pgm(std::span(reinterpret_cast<const unsigned char*>(deep.data()), deep.size())),
               FormatError);
  EXPECT_THROW(load_image(scratch("does_not_exist.pgm")), IoError);
}

TEST(ImageIo, PgmHeaderComments) {
  std::string s = "P5\n# a comment\n3 1\n255\n";
  s += std::string("\x01\x02\x03", 3);
  const auto g = detail::decode_pgm(std::span(reinterpret_cast<const unsigned char*>(s.data()), s.size()));
  EXPECT_EQ(g.width(), 3);
  EXPECT_EQ(g(2, 0), 3.0);
}

TEST(Gradient, ConstantImageIsZero) {
  const auto g = gradient(GrayImage(8, 6, 90.0));
  for (int y = 0; y + 1 < 6; ++y)
    for (int x = 0; x + 1 < 8; ++x) {
      EXPECT_EQ(g.gx[g.index(x, y)], 0.0);
      EXPECT_EQ(g.gy[g.index(x, y)], 0.0);
    }
  EXPECT_FALSE(g.defined[g.index(7, 0)]);
  EXPECT_FALSE(g.defined[g.index(0, 5)]);
}

TEST(Gradient, VerticalStepEdge) {
  const auto img = from_fn(10, 6, [](int x, int) { return x < 5 ? 0.0 : 255.0; });
  const auto g = gradient(img);
  for (int y = 0; y + 1 < 6; ++y) {
    EXPECT_EQ(g.gx[g.index(4, y)], 255.0);
    EXPECT_EQ(g.gy[g.index(4, y)], 0.0);
    EXPECT_EQ(g.gx[g.index(2, y)], 0.0);
  }
}

TEST(Gradient, HorizontalRamp) {
  const auto g = gradient(from_fn(12, 5, [](int x, int) { return double(x); }));
  for (int y = 0; y + 1 < 5; ++y)
    for (int x = 0; x + 1 < 12; ++x) {
      EXPECT_EQ(g.gx[g.index(x, y)], 1.0);
      EXPECT_EQ(g.gy[g.index(x, y)], 0.0);
    }
}

TEST(Gradient, TooSmall) { EXPECT_THROW(gradient(GrayImage(1, 5, 0.0)), ParamError); }

TEST(Gradient, ShiftInvariantProperty) {
  Rng r(9);
  for (int t = 0; t < 20; ++t) {
    const auto img = from_fn(16, 16, [&](int, int) { return std::floor(r.uniform() * 200.0); });
    const auto shifted = from_fn(16, 16, [&](int x, int y) { return img(x, y) + 55.0; });
    const auto a = gradient(img), b = gradient(shifted);
    EXPECT_EQ(a.gx, b.gx);
    EXPECT_EQ(a.gy, b.gy);
  }
}

TEST(LevelLine, DefaultThreshold) {
  EXPECT_NEAR(default_gradient_threshold(), 2.0 / std::sin(std::numbers::pi / 8), 1e-12);
  EXPECT_NEAR(default_gradient_threshold(), 5.2262, 1e-4);
}

TEST(LevelLine, VerticalStepIsVertical) {
  const auto img = from_fn(10, 6, [](int x, int) { return x < 5 ? 0.0 : 255.0; });
  const auto f = level_line_field(img, default_gradient_threshold());
  for (int y = 0; y + 1 < 6; ++y) {
    ASSERT_TRUE(f.is_valid(4, y));
    EXPECT_NEAR(std::abs(f.angle_at(4, y)), std::numbers::pi / 2, 1e-12);
    EXPECT_FALSE(f.is_valid(2, y));
  }
}

TEST(LevelLine, ConstantHasNoValidPixels) {
  EXPECT_EQ(level_line_field(GrayImage(9, 9, 17.0), default_gradient_threshold()).valid_count(), 0u);
  EXPECT_EQ(level_line_field(GrayImage(9, 9, 17.0), 0.0).valid_count(), 0u);
}

TEST(LevelLine, DiagonalRamp) {
  const auto img = from_fn(20, 20, [](int x, int y) { return 5.0 * (x + y); });
  const auto f = level_line_field(img, 1.0);
  for (int y = 0; y + 1 < 20; ++y)
    for (int x = 0; x + 1 < 20; ++x) {
      ASSERT_TRUE(f.is_valid(x, y));
      EXPECT_NEAR(orientation_diff(f.angle_at(x, y), 3 * std::numbers::pi / 4), 0.0, 1e-12);
    }
}

TEST(LevelLine, OrthogonalToGradientProperty) {
  Rng r(21);
  for (int t = 0; t < 10; ++t) {
    const auto img = random_image(r, 24, 24);
    const auto g = gradient(img);
    const auto f = level_line_field(img, default_gradient_threshold());
    for (std::size_t i = 0; i < f.valid.size(); ++i) {
      if (!f.valid[i]) {
        EXPECT_LT(f.magnitude[i], default_gradient_threshold() + 1e-12);
        continue;
      }
      const double dotv = std::cos(f.angle[i]) * g.gx[i] + std::sin(f.angle[i]) * g.gy[i];
      EXPECT_NEAR(dotv, 0.0, 1e-9);
      EXPECT_GT(f.angle[i], -std::numbers::pi);
      EXPECT_LE(f.angle[i], std::numbers::pi);
    }
  }
}

TEST(Warp, IdentityAndTranslation) {
  Rng r(2);
  const auto img = random_image(r, 16, 12);
  EXPECT_EQ(warp_image(img, Homography::identity()), img);
  const auto w = warp_image(img, Homography::translation(2, 1));
  for (int y = 1; y < 12; ++y)
    for (int x = 2; x < 16; ++x) EXPECT_NEAR(w(x, y), img(x - 2, y - 1), 1e-9);
  // Border replication for out-of-frame samples.
  EXPECT_NEAR(w(0, 0), img(0, 0), 1e-9);
}

TEST(Bilinear, MidpointAverage) {
  const GrayImage img(2, 1, std::vector<double>{10, 30});
  EXPECT_DOUBLE_EQ(sample_bilinear(img, 0.5, 0.0), 20.0);
  EXPECT_DOUBLE_EQ(sample_bilinear(img, -3.0, 0.0), 10.0);
}
