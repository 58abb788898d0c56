#pragma once

#include <bit>
#include <cstdint>

namespace cohortshap {

// Feature subset u of 1:d as a bit set: bit i stands for feature i+1.
using Subset = std::uint64_t;

inline constexpr int kMaxFeatures = 64;

inline constexpr Subset full_set(int d) {
  return d >= 64 ? ~Subset{0} : (Subset{1} << d) - 1;
}
inline constexpr Subset singleton(int j) { return Subset{1} << j; }
inline constexpr bool contains(Subset u, int j) { return (u >> j) & 1U; }
inline constexpr int cardinality(Subset u) { return std::popcount(u); }

}  // namespace cohortshap
