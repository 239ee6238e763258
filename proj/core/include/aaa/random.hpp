#pragma once

#include <cstdint>
#include <random>

namespace aaa {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Child seed for stream `tag` under `root`. Every random stream in the
// library is keyed this way, so results never depend on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag) noexcept {
  return mix64(mix64(root) ^ mix64(tag + 0x632be59bd9b4e019ULL));
}

// Stream tags.
namespace stream {
inline constexpr std::uint64_t kArrivals = 0xA11;
inline constexpr std::uint64_t kOutcomes = 0x0C0;
inline constexpr std::uint64_t kChoice = 0xC40;
inline constexpr std::uint64_t kFit = 0xF17;
}  // namespace stream

}  // namespace aaa
