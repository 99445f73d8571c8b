#include "geoprog/kernels.hpp"

#include <bit>

namespace geoprog::kernels {
namespace {

uint64_t s_popcount(const uint64_t* w, size_t n) {
  uint64_t total = 0;
  for (size_t i = 0; i < n; ++i) total += std::popcount(w[i]);
  return total;
}

uint64_t s_and_popcount(const uint64_t* a, const uint64_t* b, size_t n) {
  uint64_t total = 0;
  for (size_t i = 0; i < n; ++i) total += std::popcount(a[i] & b[i]);
  return total;
}

bool s_any_set(const uint64_t* w, size_t n) {
  for (size_t i = 0; i < n; ++i)
    if (w[i]) return true;
  return false;
}

bool s_any_and(const uint64_t* a, const uint64_t* b, size_t n) {
  for (size_t i = 0; i < n; ++i)
    if (a[i] & b[i]) return true;
  return false;
}

bool s_subset_of(const uint64_t* inner, const uint64_t* outer, size_t n) {
  for (size_t i = 0; i < n; ++i)
    if (inner[i] & ~outer[i]) return false;
  return true;
}

void s_or_into(uint64_t* dst, const uint64_t* src, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] |= src[i];
}

// Sum of bit positions within one word via binary decomposition:
// sum = sum_k 2^k * popcount(w & Mk) where Mk selects positions whose k-th
// index bit is set.
constexpr uint64_t kPosMask[6] = {
    0xaaaaaaaaaaaaaaaaull, 0xccccccccccccccccull, 0xf0f0f0f0f0f0f0f0ull,
    0xff00ff00ff00ff00ull, 0xffff0000ffff0000ull, 0xffffffff00000000ull,
};

uint64_t bit_position_sum(uint64_t w) {
  uint64_t s = 0;
  for (int k = 0; k < 6; ++k)
    s += (uint64_t{1} << k) * uint64_t(std::popcount(w & kPosMask[k]));
  return s;
}

CoordSums s_coord_sums(const uint64_t* words, size_t words_per_row, size_t rows) {
  CoordSums out;
  for (size_t y = 0; y < rows; ++y) {
    const uint64_t* row = words + y * words_per_row;
    uint64_t row_count = 0;
    for (size_t j = 0; j < words_per_row; ++j) {
      const uint64_t w = row[j];
      if (!w) continue;
      const uint64_t c = std::popcount(w);
      row_count += c;
      out.sum_x += uint64_t(j) * 64 * c + bit_position_sum(w);
    }
    out.count += row_count;
    out.sum_y += uint64_t(y) * row_count;
  }
  return out;
}

uint64_t s_min_pair_dist2(const int32_t* ax, const int32_t* ay, size_t an,
                          const int32_t* bx, const int32_t* by, size_t bn) {
  uint64_t best = ~0ull;
  for (size_t i = 0; i < an; ++i) {
    const int64_t x = ax[i], y = ay[i];
    for (size_t j = 0; j < bn; ++j) {
      const int64_t dx = x - bx[j];
      const int64_t dy = y - by[j];
      const uint64_t d2 = uint64_t(dx * dx + dy * dy);
      if (d2 < best) best = d2;
    }
    if (best == 0) break;
  }
  return best;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops = {
      "scalar",     s_popcount, s_and_popcount, s_any_set,
      s_any_and,    s_subset_of, s_or_into,     s_coord_sums,
      s_min_pair_dist2,
  };
  return ops;
}

}  // namespace geoprog::kernels
