#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace geoprog {

using Rng = std::mt19937_64;

// splitmix64 finalizer, used to mix seed components into stream seeds.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t mix_seed(std::initializer_list<uint64_t> parts) {
  uint64_t h = 0x2545f4914f6cdd1dull;
  for (uint64_t p : parts) h = mix64(h ^ mix64(p));
  return h;
}

inline Rng derive_rng(std::initializer_list<uint64_t> parts) {
  return Rng(mix_seed(parts));
}

// Fixed-algorithm draws: std::uniform_*_distribution output is
// implementation-defined, which would break cross-platform byte-identical
// runs, so sampling goes through these instead.
inline uint64_t uniform_below(Rng& rng, uint64_t n) {
  if (n <= 1) return 0;
  const uint64_t limit = ~0ull - ~0ull % n;
  for (;;) {
    const uint64_t v = rng();
    if (v < limit) return v % n;
  }
}

inline double uniform_unit(Rng& rng) { return double(rng() >> 11) * 0x1.0p-53; }

inline bool flip(Rng& rng, double p) { return uniform_unit(rng) < p; }

}  // namespace geoprog
