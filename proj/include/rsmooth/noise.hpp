#pragma once

#include <cstdint>
#include <span>

#include "rsmooth/statfun.hpp"

namespace rsmooth {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Each field goes through a full mixing round before the next is folded in,
// so nearby tuples land on unrelated outputs.
inline constexpr std::uint64_t hash_tuple(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                          std::uint64_t c) {
  std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b * 0xd1342543de82ef95ULL));
  h = splitmix64(h ^ (c + 0x3c6ef372fe94f82bULL));
  return h;
}

// Top 53 bits mapped to the open interval (0, 1).
inline constexpr double to_open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

/// Counter-based source of standard normal deviates. The deviate for
/// (seed, stream, index, coordinate) is a pure function of that tuple, so
/// samples can be generated in any order and on any number of threads.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  double uniform(std::uint64_t stream, std::uint64_t index, std::uint64_t coordinate) const {
    return detail::to_open_unit(detail::hash_tuple(seed_, stream, index, coordinate));
  }

  double deviate(std::uint64_t stream, std::uint64_t index, std::uint64_t coordinate) const {
    return std_normal_quantile(uniform(stream, index, coordinate));
  }

  /// Writes the unit deviates for one (stream, index) pair into out.
  void fill(std::uint64_t stream, std::uint64_t index, std::span<double> out) const {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = deviate(stream, index, j);
  }

  /// Independent child stream, used to give subsystems (selection vs.
  /// estimation batches, attack steps) their own key space.
  NoiseStream derive(std::uint64_t tag) const {
    return NoiseStream(detail::splitmix64(seed_ ^ detail::splitmix64(tag + 0xa54ff53a5f1d36f1ULL)));
  }

 private:
  std::uint64_t seed_;
};

}  // namespace rsmooth
