#include "dilo/image.hpp"

#include <algorithm>
#include <cmath>

namespace dilo {

Image::Image(int h, int w, int c, float fill)
    : height(h), width(w), channels(c),
      data(static_cast<std::size_t>(h) * w * c, fill) {
  if (h <= 0 || w <= 0 || (c != 1 && c != 3))
    throw dimension_error("Image: bad shape " + std::to_string(h) + "x" +
                          std::to_string(w) + "x" + std::to_string(c));
}

Mask::Mask(int h, int w, float fill)
    : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {
  if (h <= 0 || w <= 0)
    throw dimension_error("Mask: bad shape " + std::to_string(h) + "x" +
                          std::to_string(w));
}

namespace {

inline double srgb_to_linear(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

inline double lab_f(double t) {
  constexpr double kEps = 0.008856; // (6/29)^3
  return t > kEps ? std::cbrt(t) : (7.787 * t + 16.0 / 116.0);
}

} // namespace

Image rgb_to_lab(const Image &img) {
  if (img.channels != 3)
    throw dimension_error("rgb_to_lab: expected 3 channels, got " +
                          std::to_string(img.channels));
  // D65 reference white.
  constexpr double Xn = 0.95047, Yn = 1.0, Zn = 1.08883;
  Image out(img.height, img.width, 3);
  const std::size_t n = img.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    double r = srgb_to_linear(img.data[3 * i + 0]);
    double g = srgb_to_linear(img.data[3 * i + 1]);
    double b = srgb_to_linear(img.data[3 * i + 2]);
    double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    double fx = lab_f(x / Xn), fy = lab_f(y / Yn), fz = lab_f(z / Zn);
    double L = 116.0 * fy - 16.0;
    double A = 500.0 * (fx - fy);
    double B = 200.0 * (fy - fz);
    out.data[3 * i + 0] =
        static_cast<float>(std::clamp(L / 100.0, 0.0, 1.0));
    out.data[3 * i + 1] =
        static_cast<float>(std::clamp(A / 100.0, -1.0, 1.0));
    out.data[3 * i + 2] =
        static_cast<float>(std::clamp(B / 100.0, -1.0, 1.0));
  }
  return out;
}

Image to_grayscale(const Image &img) {
  if (img.channels != 3)
    throw dimension_error("to_grayscale: expected 3 channels, got " +
                          std::to_string(img.channels));
  Image out(img.height, img.width, 1);
  const std::size_t n = img.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    out.data[i] = 0.299f * img.data[3 * i + 0] + 0.587f * img.data[3 * i + 1] +
                  0.114f * img.data[3 * i + 2];
  }
  return out;
}

Image gray_to_rgb(const Image &img) {
  if (img.channels != 1)
    throw dimension_error("gray_to_rgb: expected 1 channel, got " +
                          std::to_string(img.channels));
  Image out(img.height, img.width, 3);
  const std::size_t n = img.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    out.data[3 * i + 0] = img.data[i];
    out.data[3 * i + 1] = img.data[i];
    out.data[3 * i + 2] = img.data[i];
  }
  return out;
}

std::vector<double> channel_means(const Image &img) {
  std::vector<double> m(img.channels, 0.0);
  const std::size_t n = img.pixel_count();
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < img.channels; ++c)
      m[c] += img.data[i * img.channels + c];
  for (auto &v : m)
    v /= static_cast<double>(n);
  return m;
}

} // namespace dilo
