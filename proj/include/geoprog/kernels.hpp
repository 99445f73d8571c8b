#pragma once

#include <cstddef>
#include <cstdint>

// Bit-parallel kernels over packed mask words (64 pixels per word, row major,
// padding bits in the last word of each row are zero). Two lanes: a scalar
// reference implementation and an AVX2 variant selected at runtime; they are
// equivalence-tested against each other in the unit suite.

namespace geoprog::kernels {

struct CoordSums {
  uint64_t count = 0;  // set bits
  uint64_t sum_x = 0;  // sum of column indices of set bits
  uint64_t sum_y = 0;  // sum of row indices of set bits
};

struct Ops {
  const char* name;
  uint64_t (*popcount)(const uint64_t* w, size_t n);
  uint64_t (*and_popcount)(const uint64_t* a, const uint64_t* b, size_t n);
  bool (*any_set)(const uint64_t* w, size_t n);
  bool (*any_and)(const uint64_t* a, const uint64_t* b, size_t n);
  // true iff every set bit of `inner` is set in `outer`
  bool (*subset_of)(const uint64_t* inner, const uint64_t* outer, size_t n);
  void (*or_into)(uint64_t* dst, const uint64_t* src, size_t n);
  // Coordinate sums over a words_per_row x rows grid.
  CoordSums (*coord_sums)(const uint64_t* words, size_t words_per_row, size_t rows);
  // Minimum squared Euclidean distance over the cross product of two point
  // sets. Coordinates must stay below 2^15 so squares fit in int32.
  uint64_t (*min_pair_dist2)(const int32_t* ax, const int32_t* ay, size_t an,
                             const int32_t* bx, const int32_t* by, size_t bn);
};

const Ops& scalar_ops();
const Ops* avx2_ops();  // nullptr when AVX2 is unavailable at build or run time
const Ops& active();
void set_active(const Ops& ops);  // test hook

}  // namespace geoprog::kernels
