#ifndef ACCMV_RNG_HPP
#define ACCMV_RNG_HPP

#include <cstdint>
#include <random>

namespace accmv {

/// splitmix64 finalizer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of stream `stream` under master seed `seed`. Streams are derived,
/// not advanced, so replicate k gets the same numbers in any execution order.
[[nodiscard]] constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

[[nodiscard]] inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(stream_seed(seed, stream));
}

}  // namespace accmv

#endif  // ACCMV_RNG_HPP
