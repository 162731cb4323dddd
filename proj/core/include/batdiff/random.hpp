#pragma once

#include <cstdint>
#include <random>

namespace batdiff {

/// Independent generator streams derived from one run seed.
enum class RandomStream : std::uint32_t {
  kTrain = 1,
  kSampler = 2,
  kNoiseSynthesis = 3,
};

/// seed_seq over (seed low word, seed high word, stream id).
inline std::mt19937_64 make_stream(std::uint64_t seed, RandomStream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

}  // namespace batdiff
