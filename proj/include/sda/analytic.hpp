#pragma once

#include "sda/core.hpp"

namespace sda {

/// Write amplification of a log-structured cleaner whose cleaned segments
/// have mean utilization mu: rho = 2 / (1 - mu).
inline double lfs_rho(double mu) {
  if (!(mu >= 0.0) || mu >= 1.0) throw Error(ErrorCode::invalid_argument, "mu must lie in [0, 1)");
  return 2.0 / (1.0 - mu);
}

/// Slowdown of a log-embedded CoW B-tree against an append-only structure
/// holding b entries per block: b * (1 + rho).
inline double cow_slowdown(double b, double rho) {
  if (!(b >= 1.0)) throw Error(ErrorCode::invalid_argument, "entries per block must be >= 1");
  if (!(rho >= 0.0)) throw Error(ErrorCode::invalid_argument, "rho must be >= 0");
  return b * (1.0 + rho);
}

namespace detail {
inline Fraction reduced(unsigned __int128 num, unsigned __int128 den) {
  auto a = num, b = den;
  while (b != 0) {
    const auto t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  if (num > UINT64_MAX || den > UINT64_MAX) throw Error(ErrorCode::invalid_argument, "fraction overflow");
  return {static_cast<std::uint64_t>(num), static_cast<std::uint64_t>(den)};
}
}  // namespace detail

// Exact variants; lfs_rho(4/5) is 10/1 with no rounding.
inline Fraction lfs_rho(Fraction mu) {
  if (mu.den == 0 || mu.num >= mu.den) throw Error(ErrorCode::invalid_argument, "mu must lie in [0, 1)");
  return detail::reduced(static_cast<unsigned __int128>(2) * mu.den, mu.den - mu.num);
}

inline Fraction cow_slowdown(Fraction b, Fraction rho) {
  if (b.den == 0 || b.num < b.den) throw Error(ErrorCode::invalid_argument, "entries per block must be >= 1");
  if (rho.den == 0) throw Error(ErrorCode::invalid_argument, "bad rho");
  using u128 = unsigned __int128;
  return detail::reduced(u128(b.num) * (u128(rho.den) + rho.num), u128(b.den) * rho.den);
}

}  // namespace sda
