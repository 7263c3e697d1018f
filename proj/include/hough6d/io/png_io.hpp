#pragma once

#include <string>

#include "hough6d/core/types.hpp"

namespace hough6d {

/// 8-bit RGB, three planes interleaved on disk. Writes are atomic
/// (temp file + rename).
void writePngRgb8(const std::string& path, const std::array<ImageU8, 3>& rgb);
std::array<ImageU8, 3> readPngRgb8(const std::string& path);

/// 16-bit single-channel (depth in millimeters).
void writePngGray16(const std::string& path, const ImageU16& image);
ImageU16 readPngGray16(const std::string& path);

/// 8-bit single-channel (masks, normalized diagnostics).
void writePngGray8(const std::string& path, const ImageU8& image);

}  // namespace hough6d
