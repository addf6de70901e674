#pragma once

#include <cstdint>
#include <random>

namespace egpd {

using Rng = std::mt19937_64;

// Uniform draw on the open interval (0, 1) from the top 53 bits of the
// engine output. Unlike std::uniform_real_distribution the result is the
// same across standard library implementations.
inline double uniform_open01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace egpd
