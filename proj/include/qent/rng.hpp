#pragma once

#include <cstdint>
#include <random>

namespace qent {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent child seed for (stream, index); stable across thread counts.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0) noexcept {
  return mix64(mix64(base ^ mix64(stream)) + index);
}

// Stream tags used by derive_seed.
namespace streams {
inline constexpr std::uint64_t kTrainData = 1;
inline constexpr std::uint64_t kCalibration = 2;
inline constexpr std::uint64_t kInit = 3;
inline constexpr std::uint64_t kShuffle = 4;
inline constexpr std::uint64_t kDropout = 5;
inline constexpr std::uint64_t kGenerator = 6;
inline constexpr std::uint64_t kUnitaries = 7;
inline constexpr std::uint64_t kValidation = 8;
}  // namespace streams

std::uint64_t entropy_seed();

}  // namespace qent
