#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "dilo/image.hpp"
#include "dilo/png_io.hpp"
#include "dilo/rng.hpp"

using namespace dilo;

namespace {

Image solid(float r, float g, float b) {
  Image img(4, 4, 3);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      img.at(y, x, 0) = r;
      img.at(y, x, 1) = g;
      img.at(y, x, 2) = b;
    }
  return img;
}

std::string temp_png(const char *name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("rgb_to_lab hits the reference converter values") {
  // Frozen from an independent colorimetry implementation (skimage
  // rgb2lab, D65): red (53.240588, 80.092308, 67.202751), and the
  // mixed color (0.25,0.5,0.75) -> (52.018012, 0.090631, -39.35937).
  Image lab = rgb_to_lab(solid(1, 0, 0));
  CHECK(lab.at(0, 0, 0) == doctest::Approx(0.532406).epsilon(1e-3));
  CHECK(lab.at(0, 0, 1) == doctest::Approx(0.800923).epsilon(1e-3));
  CHECK(lab.at(0, 0, 2) == doctest::Approx(0.672028).epsilon(1e-3));

  Image mixed = rgb_to_lab(solid(0.25f, 0.5f, 0.75f));
  CHECK(mixed.at(1, 1, 0) == doctest::Approx(0.520180).epsilon(1e-3));
  CHECK(mixed.at(1, 1, 1) == doctest::Approx(0.000906).epsilon(1e-3));
  CHECK(mixed.at(1, 1, 2) == doctest::Approx(-0.393594).epsilon(1e-3));
}

TEST_CASE("rgb_to_lab endpoints: black and white") {
  Image black = rgb_to_lab(solid(0, 0, 0));
  CHECK(black.at(0, 0, 0) == 0.0f);
  CHECK(black.at(0, 0, 1) == 0.0f);
  CHECK(black.at(0, 0, 2) == 0.0f);

  Image white = rgb_to_lab(solid(1, 1, 1));
  CHECK(white.at(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(std::abs(white.at(0, 0, 1)) < 1e-3);
  CHECK(std::abs(white.at(0, 0, 2)) < 1e-3);
}

TEST_CASE("rgb_to_lab: blue clamps b* to -1 after rescaling") {
  Image blue = rgb_to_lab(solid(0, 0, 1));
  CHECK(blue.at(0, 0, 2) == -1.0f); // -107.86/100 clamped
}

TEST_CASE("rgb_to_lab rejects single-channel input") {
  Image gray(4, 4, 1);
  CHECK_THROWS_AS(rgb_to_lab(gray), dimension_error);
}

TEST_CASE("L is monotone in gray level") {
  float prev = -1.0f;
  for (int i = 0; i <= 20; ++i) {
    float v = i / 20.0f;
    Image lab = rgb_to_lab(solid(v, v, v));
    CHECK(lab.at(0, 0, 0) > prev);
    prev = lab.at(0, 0, 0);
  }
}

TEST_CASE("to_grayscale weights") {
  CHECK(to_grayscale(solid(1, 1, 1)).at(2, 2, 0) == doctest::Approx(1.0));
  CHECK(to_grayscale(solid(1, 0, 0)).at(0, 0, 0) == doctest::Approx(0.299));
  CHECK_THROWS_AS(to_grayscale(Image(4, 4, 1)), dimension_error);
}

TEST_CASE("to_grayscale matches a scalar loop on random input") {
  Rng rng(5);
  Image img(9, 7, 3);
  for (auto &v : img.data)
    v = static_cast<float>(rng.uniform());
  Image gray = to_grayscale(img);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 7; ++x) {
      float want = 0.299f * img.at(y, x, 0) + 0.587f * img.at(y, x, 1) +
                   0.114f * img.at(y, x, 2);
      CHECK(gray.at(y, x, 0) == want);
      // stays inside the convex hull of the channels
      float lo = std::min({img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2)});
      float hi = std::max({img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2)});
      CHECK(gray.at(y, x, 0) >= lo - 1e-6f);
      CHECK(gray.at(y, x, 0) <= hi + 1e-6f);
    }
}

TEST_CASE("png round trip is lossless after quantization") {
  Rng rng(7);
  Image img(12, 10, 3);
  for (auto &v : img.data)
    v = static_cast<float>(rng.uniform_int(0, 255) / 255.0);
  std::string path = temp_png("dilo_test_rt.png");
  png_write(path, img);
  Image back = png_read(path);
  REQUIRE(back.same_dims(img));
  for (std::size_t i = 0; i < img.data.size(); ++i)
    CHECK(back.data[i] == doctest::Approx(img.data[i]).epsilon(1e-9));

  // quantize -> write -> read -> quantize is idempotent
  Image noisy(6, 6, 1);
  for (auto &v : noisy.data)
    v = static_cast<float>(rng.uniform());
  Mask m(6, 6);
  m.data = noisy.data;
  Mask q1 = quantize8(m);
  std::string path2 = temp_png("dilo_test_rt2.png");
  mask_write(path2, q1);
  Mask q2 = quantize8(mask_read(path2));
  for (std::size_t i = 0; i < q1.data.size(); ++i)
    CHECK(q1.data[i] == q2.data[i]);
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("png: all-zero image decodes to zeros") {
  Image img(4, 4, 3);
  std::string path = temp_png("dilo_test_zero.png");
  png_write(path, img);
  Image back = png_read(path);
  REQUIRE(back.height == 4);
  REQUIRE(back.width == 4);
  for (float v : back.data)
    CHECK(v == 0.0f);
  std::remove(path.c_str());
}

TEST_CASE("png: 16-bit values normalize by 1/65535") {
  std::vector<std::uint16_t> vals = {0, 32768, 65535, 1000,
                                     2000, 3000, 40000, 65535,
                                     9, 99, 999, 9999};
  std::string path = temp_png("dilo_test_16.png");
  png_write16(path, vals, 3, 4);
  Image back = png_read(path);
  REQUIRE(back.channels == 1);
  for (std::size_t i = 0; i < vals.size(); ++i)
    CHECK(back.data[i] == doctest::Approx(vals[i] / 65535.0).epsilon(1e-9));
  std::remove(path.c_str());
}

TEST_CASE("png read reports missing and corrupt files with the path") {
  CHECK_THROWS_AS(png_read("/nonexistent/nope.png"), io_error);
  std::string path = temp_png("dilo_test_corrupt.png");
  {
    std::FILE *f = std::fopen(path.c_str(), "wb");
    std::fputs("not a png", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(png_read(path), io_error);
  std::remove(path.c_str());
}
