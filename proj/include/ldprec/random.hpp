#pragma once

#include <cstdint>
#include <random>

namespace ldprec {

// All stochastic operations take an explicit engine of this type.
using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent child seeds so that
// per-user streams do not depend on processing order.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index) noexcept {
  return mix_seed(mix_seed(master ^ mix_seed(stream)) + index);
}

inline Rng derive_rng(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  return Rng(derive_seed(master, stream, index));
}

// Uniform double strictly inside (0, 1), built from the top 53 bits.
inline double uniform_open01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// Stream tags for derive_seed.
namespace streams {
inline constexpr std::uint64_t kPerturb = 1;
inline constexpr std::uint64_t kUserFactors = 2;
inline constexpr std::uint64_t kItemFactors = 3;
inline constexpr std::uint64_t kFolds = 4;
inline constexpr std::uint64_t kSubsample = 5;
inline constexpr std::uint64_t kSgd = 6;
inline constexpr std::uint64_t kAudit = 7;
inline constexpr std::uint64_t kNoise = 8;
inline constexpr std::uint64_t kFit = 9;
}  // namespace streams

}  // namespace ldprec
