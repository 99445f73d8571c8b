#include "geoprog/kernels.hpp"

// AVX2 lane. This translation unit is compiled with -mavx2; callers must only
// reach it through the dispatch table, which checks CPU support first.

#if defined(__AVX2__) && (defined(__x86_64__) || defined(_M_X64))

#include <immintrin.h>

#include <bit>

namespace geoprog::kernels {
namespace {

// Per-8-byte-lane popcount using the nibble LUT trick; result is four u64
// lane counts.
inline __m256i popcnt_lanes(__m256i v) {
  const __m256i lut = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                                       0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
  const __m256i low = _mm256_set1_epi8(0x0f);
  const __m256i lo = _mm256_and_si256(v, low);
  const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low);
  const __m256i cnt =
      _mm256_add_epi8(_mm256_shuffle_epi8(lut, lo), _mm256_shuffle_epi8(lut, hi));
  return _mm256_sad_epu8(cnt, _mm256_setzero_si256());
}

inline uint64_t hsum_epi64(__m256i v) {
  __m128i lo = _mm256_castsi256_si128(v);
  __m128i hi = _mm256_extracti128_si256(v, 1);
  __m128i s = _mm_add_epi64(lo, hi);
  return uint64_t(_mm_extract_epi64(s, 0)) + uint64_t(_mm_extract_epi64(s, 1));
}

uint64_t v_popcount(const uint64_t* w, size_t n) {
  __m256i acc = _mm256_setzero_si256();
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_epi64(acc, popcnt_lanes(_mm256_loadu_si256((const __m256i*)(w + i))));
  uint64_t total = hsum_epi64(acc);
  for (; i < n; ++i) total += std::popcount(w[i]);
  return total;
}

uint64_t v_and_popcount(const uint64_t* a, const uint64_t* b, size_t n) {
  __m256i acc = _mm256_setzero_si256();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i v = _mm256_and_si256(_mm256_loadu_si256((const __m256i*)(a + i)),
                                       _mm256_loadu_si256((const __m256i*)(b + i)));
    acc = _mm256_add_epi64(acc, popcnt_lanes(v));
  }
  uint64_t total = hsum_epi64(acc);
  for (; i < n; ++i) total += std::popcount(a[i] & b[i]);
  return total;
}

bool v_any_set(const uint64_t* w, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i v = _mm256_loadu_si256((const __m256i*)(w + i));
    if (!_mm256_testz_si256(v, v)) return true;
  }
  for (; i < n; ++i)
    if (w[i]) return true;
  return false;
}

bool v_any_and(const uint64_t* a, const uint64_t* b, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i va = _mm256_loadu_si256((const __m256i*)(a + i));
    const __m256i vb = _mm256_loadu_si256((const __m256i*)(b + i));
    if (!_mm256_testz_si256(va, vb)) return true;
  }
  for (; i < n; ++i)
    if (a[i] & b[i]) return true;
  return false;
}

bool v_subset_of(const uint64_t* inner, const uint64_t* outer, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i vi = _mm256_loadu_si256((const __m256i*)(inner + i));
    const __m256i vo = _mm256_loadu_si256((const __m256i*)(outer + i));
    // testc: CF = 1 iff (~vo & vi) == 0
    if (!_mm256_testc_si256(vo, vi)) return false;
  }
  for (; i < n; ++i)
    if (inner[i] & ~outer[i]) return false;
  return true;
}

void v_or_into(uint64_t* dst, const uint64_t* src, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i v = _mm256_or_si256(_mm256_loadu_si256((const __m256i*)(dst + i)),
                                      _mm256_loadu_si256((const __m256i*)(src + i)));
    _mm256_storeu_si256((__m256i*)(dst + i), v);
  }
  for (; i < n; ++i) dst[i] |= src[i];
}

constexpr uint64_t kPosMask[6] = {
    0xaaaaaaaaaaaaaaaaull, 0xccccccccccccccccull, 0xf0f0f0f0f0f0f0f0ull,
    0xff00ff00ff00ff00ull, 0xffff0000ffff0000ull, 0xffffffff00000000ull,
};

uint64_t bit_position_sum_scalar(uint64_t w) {
  uint64_t s = 0;
  for (int k = 0; k < 6; ++k)
    s += (uint64_t{1} << k) * uint64_t(std::popcount(w & kPosMask[k]));
  return s;
}

CoordSums v_coord_sums(const uint64_t* words, size_t words_per_row, size_t rows) {
  CoordSums out;
  for (size_t y = 0; y < rows; ++y) {
    const uint64_t* row = words + y * words_per_row;
    uint64_t row_count = 0;
    size_t j = 0;
    for (; j + 4 <= words_per_row; j += 4) {
      const __m256i v = _mm256_loadu_si256((const __m256i*)(row + j));
      if (_mm256_testz_si256(v, v)) continue;
      // Per-word counts feed the per-word column bases.
      alignas(32) uint64_t cnt[4];
      _mm256_store_si256((__m256i*)cnt, popcnt_lanes(v));
      // Within-word position sums, decomposed by position bit.
      __m256i pos = _mm256_setzero_si256();
      for (int k = 0; k < 6; ++k) {
        const __m256i masked = _mm256_and_si256(v, _mm256_set1_epi64x(int64_t(kPosMask[k])));
        pos = _mm256_add_epi64(pos, _mm256_slli_epi64(popcnt_lanes(masked), k));
      }
      out.sum_x += hsum_epi64(pos);
      for (int l = 0; l < 4; ++l) {
        row_count += cnt[l];
        out.sum_x += uint64_t(j + l) * 64 * cnt[l];
      }
    }
    for (; j < words_per_row; ++j) {
      const uint64_t w = row[j];
      if (!w) continue;
      const uint64_t c = std::popcount(w);
      row_count += c;
      out.sum_x += uint64_t(j) * 64 * c + bit_position_sum_scalar(w);
    }
    out.count += row_count;
    out.sum_y += uint64_t(y) * row_count;
  }
  return out;
}

inline uint64_t hmin_epu32(__m256i v) {
  __m128i lo = _mm256_castsi256_si128(v);
  __m128i hi = _mm256_extracti128_si256(v, 1);
  __m128i m = _mm_min_epu32(lo, hi);
  m = _mm_min_epu32(m, _mm_shuffle_epi32(m, _MM_SHUFFLE(1, 0, 3, 2)));
  m = _mm_min_epu32(m, _mm_shuffle_epi32(m, _MM_SHUFFLE(2, 3, 0, 1)));
  return uint32_t(_mm_cvtsi128_si32(m));
}

uint64_t v_min_pair_dist2(const int32_t* ax, const int32_t* ay, size_t an,
                          const int32_t* bx, const int32_t* by, size_t bn) {
  uint64_t best = ~0ull;
  for (size_t i = 0; i < an && best != 0; ++i) {
    const __m256i x = _mm256_set1_epi32(ax[i]);
    const __m256i y = _mm256_set1_epi32(ay[i]);
    __m256i vbest = _mm256_set1_epi32(-1);  // all ones = UINT32_MAX
    size_t j = 0;
    for (; j + 8 <= bn; j += 8) {
      const __m256i dx = _mm256_sub_epi32(x, _mm256_loadu_si256((const __m256i*)(bx + j)));
      const __m256i dy = _mm256_sub_epi32(y, _mm256_loadu_si256((const __m256i*)(by + j)));
      const __m256i d2 = _mm256_add_epi32(_mm256_mullo_epi32(dx, dx),
                                          _mm256_mullo_epi32(dy, dy));
      vbest = _mm256_min_epu32(vbest, d2);
    }
    uint64_t row_best = (j > 0) ? hmin_epu32(vbest) : ~0ull;
    for (; j < bn; ++j) {
      const int64_t dx = int64_t(ax[i]) - bx[j];
      const int64_t dy = int64_t(ay[i]) - by[j];
      const uint64_t d2 = uint64_t(dx * dx + dy * dy);
      if (d2 < row_best) row_best = d2;
    }
    if (row_best < best) best = row_best;
  }
  return best;
}

}  // namespace

const Ops* avx2_ops_impl() {
  static const Ops ops = {
      "avx2",      v_popcount, v_and_popcount, v_any_set,
      v_any_and,   v_subset_of, v_or_into,     v_coord_sums,
      v_min_pair_dist2,
  };
  return &ops;
}

}  // namespace geoprog::kernels

#else

namespace geoprog::kernels {
const Ops* avx2_ops_impl() { return nullptr; }
}  // namespace geoprog::kernels

#endif
