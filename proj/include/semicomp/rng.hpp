#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace semicomp {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent sub-stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for sub-stream `stream` of a run seeded with `seed`. Streams are keyed by
/// (seed, purpose, index) so results never depend on scheduling order.
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t purpose,
                                       std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ splitmix64(purpose)) + index);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index) {
  return Rng(substream_seed(seed, purpose, index));
}

// Hand-rolled draws so that streams are identical across standard libraries.

/// Uniform on the open interval (0,1).
inline double uniform01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double exponential1(Rng& rng) { return -std::log(uniform01(rng)); }

// Purpose tags for substream_seed.
namespace stream {
inline constexpr std::uint64_t kSubject = 1;
inline constexpr std::uint64_t kBootstrap = 2;
inline constexpr std::uint64_t kFrailty = 3;
inline constexpr std::uint64_t kSplit = 4;
inline constexpr std::uint64_t kReplicate = 5;
}  // namespace stream

}  // namespace semicomp
