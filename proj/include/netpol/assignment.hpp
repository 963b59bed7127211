#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "netpol/errors.hpp"

namespace netpol {

// A treatment assignment over at most 64 units. Bit i set means unit i is treated.
using Assignment = std::uint64_t;
using Unit = std::size_t;

inline constexpr std::size_t kMaxBitmaskUnits = 64;
inline constexpr std::size_t kDefaultEnumerationCap = 20;

constexpr bool is_treated(Assignment z, Unit i) noexcept { return ((z >> i) & 1U) != 0; }
constexpr Assignment with_unit(Assignment z, Unit i) noexcept { return z | (Assignment{1} << i); }
constexpr Assignment without_unit(Assignment z, Unit i) noexcept {
  return z & ~(Assignment{1} << i);
}
constexpr std::size_t treated_count(Assignment z) noexcept {
  return static_cast<std::size_t>(std::popcount(z));
}

constexpr Assignment all_units(std::size_t n) noexcept {
  return n >= 64 ? ~Assignment{0} : ((Assignment{1} << n) - 1);
}

inline void require_bitmask_size(std::size_t n) {
  if (n > kMaxBitmaskUnits) {
    throw ValidationError("bitmask assignments support at most 64 units, got n=" +
                          std::to_string(n));
  }
}

inline void require_enumerable(std::size_t n, std::size_t cap) {
  require_bitmask_size(n);
  if (n > cap) throw EnumerationTooLarge(n, cap);
}

inline std::uint64_t assignment_count(std::size_t n) { return std::uint64_t{1} << n; }

// Bit string with unit 0 first.
inline std::string to_bit_string(Assignment z, std::size_t n) {
  std::string s(n, '0');
  for (Unit i = 0; i < n; ++i) {
    if (is_treated(z, i)) s[i] = '1';
  }
  return s;
}

inline std::vector<Unit> members(Assignment mask) {
  std::vector<Unit> out;
  out.reserve(treated_count(mask));
  while (mask != 0) {
    out.push_back(static_cast<Unit>(std::countr_zero(mask)));
    mask &= mask - 1;
  }
  return out;
}

}  // namespace netpol
