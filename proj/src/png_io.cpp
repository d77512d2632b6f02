#include "dilo/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

namespace dilo {

namespace {

struct FileCloser {
  void operator()(std::FILE *f) const {
    if (f)
      std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string &path, const std::string &what) {
  throw io_error("png: " + what + ": " + path);
}

} // namespace

Image png_read(const std::string &path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp)
    fail(path, "cannot open");

  png_byte header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
    fail(path, "not a PNG file");

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png)
    fail(path, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(path, "libpng init failed");
  }
  std::vector<png_bytep> row_ptrs;
  std::vector<png_byte> buf;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "decode error (truncated or corrupt)");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  int color_type = png_get_color_type(png, info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
    color_type = PNG_COLOR_TYPE_RGB;
    bit_depth = 8;
  }
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
    bit_depth = 8;
  }
  if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "unsupported color type (only gray/RGB without alpha)");
  }
  if (bit_depth == 16)
    png_set_swap(png); // stored big endian; we want host little endian
  png_read_update_info(png, info);

  const int channels = (color_type == PNG_COLOR_TYPE_GRAY) ? 1 : 3;
  const int bytes_pp = channels * (bit_depth == 16 ? 2 : 1);
  buf.resize(static_cast<std::size_t>(h) * w * bytes_pp);
  row_ptrs.resize(h);
  for (png_uint_32 y = 0; y < h; ++y)
    row_ptrs[y] = buf.data() + static_cast<std::size_t>(y) * w * bytes_pp;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(static_cast<int>(h), static_cast<int>(w), channels);
  const std::size_t n = img.pixel_count() * channels;
  if (bit_depth == 16) {
    const std::uint16_t *p = reinterpret_cast<const std::uint16_t *>(buf.data());
    for (std::size_t i = 0; i < n; ++i)
      img.data[i] = static_cast<float>(p[i] / 65535.0);
  } else {
    for (std::size_t i = 0; i < n; ++i)
      img.data[i] = static_cast<float>(buf[i] / 255.0);
  }
  return img;
}

void png_write(const std::string &path, const Image &img) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp)
    fail(path, "cannot open for writing");

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png)
    fail(path, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(path, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "encode error");
  }
  png_init_io(png, fp.get());
  const int color_type =
      img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, img.width, img.height, 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<png_byte> row(static_cast<std::size_t>(img.width) * img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        float v = img.at(y, x, c);
        v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
        row[static_cast<std::size_t>(x) * img.channels + c] =
            static_cast<png_byte>(std::lround(v * 255.0f));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void png_write16(const std::string &path, const std::vector<std::uint16_t> &values,
                 int height, int width) {
  if (values.size() != static_cast<std::size_t>(height) * width)
    throw dimension_error("png_write16: value count does not match dims");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp)
    fail(path, "cannot open for writing");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png)
    fail(path, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(path, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "encode error");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_set_swap(png);
  std::vector<std::uint16_t> row(width);
  for (int y = 0; y < height; ++y) {
    std::memcpy(row.data(), values.data() + static_cast<std::size_t>(y) * width,
                sizeof(std::uint16_t) * width);
    png_write_row(png, reinterpret_cast<png_bytep>(row.data()));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Mask mask_read(const std::string &path) {
  Image img = png_read(path);
  if (img.channels != 1)
    throw io_error("mask_read: expected grayscale PNG: " + path);
  Mask m(img.height, img.width);
  m.data = std::move(img.data);
  return m;
}

void mask_write(const std::string &path, const Mask &mask) {
  Image img(mask.height, mask.width, 1);
  img.data = mask.data;
  png_write(path, img);
}

Mask quantize8(const Mask &mask) {
  Mask out = mask;
  for (auto &v : out.data) {
    float c = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
    v = static_cast<float>(std::lround(c * 255.0f) / 255.0);
  }
  return out;
}

} // namespace dilo
