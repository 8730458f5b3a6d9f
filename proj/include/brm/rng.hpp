#pragma once

// Counter-based Philox4x32-10 generator and a keyed Gaussian draw. Each
// matrix entry gets its own counter, so a sample is a pure function of
// (seed, replica, x, y) regardless of the order entries are generated in.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace brm::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline Counter philox4x32_10(Counter ctr, Key key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u, kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u, kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

inline Key key_from_seed(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

/// Uniform on (0, 1] from 53 random bits.
inline double to_unit_open_closed(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

/// Uniform on [0, 1).
inline double to_unit_closed_open(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

/// Standard normal variate for the entry (x, y) of replica `replica`.
/// Indices may be negative; they are offset into the unsigned counter words.
inline double keyed_normal(Key key, std::uint64_t replica, std::int64_t x, std::int64_t y) {
  const Counter ctr = {static_cast<std::uint32_t>(replica),
                       static_cast<std::uint32_t>(replica >> 32),
                       static_cast<std::uint32_t>(x + 0x80000000LL),
                       static_cast<std::uint32_t>(y + 0x80000000LL)};
  const Counter r = philox4x32_10(ctr, key);
  const double u1 = to_unit_open_closed(r[0], r[1]);
  const double u2 = to_unit_closed_open(r[2], r[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace brm::rng
