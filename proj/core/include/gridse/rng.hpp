#pragma once

#include <cstdint>
#include <random>

namespace gridse {

using Rng = std::mt19937_64;

/// Independent stream derived from (seed, stream). Streams with distinct
/// tags never collide for the same seed.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream & 0xffffffffu),
                    static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

/// One standard-normal draw. A fresh distribution per call keeps the
/// consumption of the underlying engine independent of call-site history.
inline double draw_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

/// One uniform draw in [lo, hi).
inline double draw_uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(rng);
}

/// One uniform integer draw in [0, bound).
inline int draw_index(Rng& rng, int bound) {
  std::uniform_int_distribution<int> dist(0, bound - 1);
  return dist(rng);
}

}  // namespace gridse
