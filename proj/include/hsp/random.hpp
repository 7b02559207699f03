#pragma once

#include <cstdint>
#include <random>

namespace hsp {

using Rng = std::mt19937_64;

// Uniform double in [0, 1) from the top 53 bits. Spelled out instead of
// std::uniform_real_distribution so streams agree across standard libraries.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli_draw(Rng& rng, double p) { return uniform01(rng) < p; }

}  // namespace hsp
