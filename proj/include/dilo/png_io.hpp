#ifndef DILO_PNG_IO_HPP
#define DILO_PNG_IO_HPP

#include <string>

#include "dilo/image.hpp"

namespace dilo {

/// Read an 8- or 16-bit grayscale or RGB PNG. 8-bit values map to v/255,
/// 16-bit to v/65535. Palette images are expanded to RGB; alpha is not
/// supported.
Image png_read(const std::string &path);

/// Write as 8-bit PNG (gray for 1 channel, RGB for 3), quantizing with
/// round(v*255).
void png_write(const std::string &path, const Image &img);

/// Write a single channel as 16-bit grayscale; used for label dumps.
void png_write16(const std::string &path, const std::vector<std::uint16_t> &values,
                 int height, int width);

/// Masks serialize as 8-bit grayscale PNG, 255 = foreground.
Mask mask_read(const std::string &path);
void mask_write(const std::string &path, const Mask &mask);

/// Snap every value to the nearest 8-bit level (round(v*255)/255); the
/// exact effect of a PNG round trip, usable without touching disk.
Mask quantize8(const Mask &mask);

} // namespace dilo

#endif
