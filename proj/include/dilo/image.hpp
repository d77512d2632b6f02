#ifndef DILO_IMAGE_HPP
#define DILO_IMAGE_HPP

#include <cstddef>
#include <vector>

#include "dilo/common.hpp"

namespace dilo {

/// Dense H x W x C raster of floats in [0,1], row major, C is 1 or 3.
/// Values are kept in floating point everywhere; quantization happens
/// only at the PNG boundary.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, int c, float fill = 0.0f);

  float &at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  float at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height) * width;
  }
  bool same_dims(const Image &o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

/// Single-channel raster in [0,1]. A "binary" mask holds only {0,1}.
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<float> data;

  Mask() = default;
  Mask(int h, int w, float fill = 0.0f);

  float &at(int y, int x) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  float at(int y, int x) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height) * width;
  }
};

/// sRGB (D65) to CIE Lab, rescaled so L in [0,1] and a,b in [-1,1]
/// (all three divided by 100, then clamped). Keeps every downstream
/// color-distance bandwidth on an O(1) scale.
Image rgb_to_lab(const Image &img);

/// Rec.601 luma: 0.299 R + 0.587 G + 0.114 B. Output has one channel.
Image to_grayscale(const Image &img);

/// Replicate a single channel into three.
Image gray_to_rgb(const Image &img);

/// Per-channel mean of the image.
std::vector<double> channel_means(const Image &img);

} // namespace dilo

#endif
