#pragma once

#include <filesystem>

#include "batdiff/image.hpp"

namespace batdiff {

/// Reads PNG (gray, gray+alpha dropped, RGB, RGBA dropped; 8/16 bit) or
/// binary PGM/PPM (P5/P6, maxval up to 65535). Values normalized to [0,1].
Image load_image(const std::filesystem::path& path);

/// Writes 8-bit PNG, PGM or PPM chosen by extension. Values are clamped to
/// [0,1] and rounded to nearest.
void save_image(const Image& img, const std::filesystem::path& path);

/// Quantizes to the 8-bit grid used by save_image.
Image quantize8(const Image& img);

}  // namespace batdiff
