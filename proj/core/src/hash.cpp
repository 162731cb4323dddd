#include "batdiff/hash.hpp"

#include <cstdio>

namespace batdiff {

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t image_hash(const Image& img) {
  const int dims[3] = {img.height(), img.width(), img.channels()};
  std::uint64_t h = fnv1a64({reinterpret_cast<const unsigned char*>(dims), sizeof dims});
  const auto data = img.data();
  return fnv1a64({reinterpret_cast<const unsigned char*>(data.data()), data.size_bytes()}, h);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace batdiff
