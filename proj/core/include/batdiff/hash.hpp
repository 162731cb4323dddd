#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "batdiff/image.hpp"

namespace batdiff {

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ull);

/// Hash of the image's shape and the exact bit patterns of its values.
std::uint64_t image_hash(const Image& img);

std::string hex64(std::uint64_t v);

}  // namespace batdiff
