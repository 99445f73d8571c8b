#include "geoprog/raster.hpp"

namespace geoprog {

Mask::Mask(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw Error("mask dimensions must be positive");
  stride_ = (size_t(width) + 63) / 64;
  words_.assign(stride_ * size_t(height), 0);
}

Mask Mask::from_pixels(int width, int height,
                       const std::vector<std::pair<int, int>>& xy) {
  Mask m(width, height);
  for (const auto& [x, y] : xy) m.set(x, y);
  return m;
}

void Mask::set(int x, int y, bool value) {
  if (x < 0 || x >= width_ || y < 0 || y >= height_)
    throw Error("mask pixel out of range");
  uint64_t& w = words_[size_t(y) * stride_ + size_t(x) / 64];
  const uint64_t bit = uint64_t{1} << (x % 64);
  if (value)
    w |= bit;
  else
    w &= ~bit;
}

std::vector<int64_t> rle_encode(const Mask& mask) {
  std::vector<int64_t> runs;
  bool current = false;  // zero-first convention
  int64_t run = 0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const bool bit = mask.test(x, y);
      if (bit == current) {
        ++run;
      } else {
        runs.push_back(run);
        current = bit;
        run = 1;
      }
    }
  }
  runs.push_back(run);
  return runs;
}

Mask rle_decode(const std::vector<int64_t>& runs, int width, int height) {
  if (width < 1 || height < 1) throw SchemaError("rle: dimensions must be positive");
  const int64_t total = int64_t(width) * int64_t(height);
  int64_t sum = 0;
  for (int64_t r : runs) {
    if (r < 0) throw SchemaError("rle: negative run length");
    sum += r;
  }
  if (sum != total)
    throw SchemaError("rle: runs sum to " + std::to_string(sum) + ", expected " +
                      std::to_string(total));
  Mask m(width, height);
  int64_t pos = 0;
  bool current = false;
  for (int64_t r : runs) {
    if (current) {
      for (int64_t i = pos; i < pos + r; ++i)
        m.set(int(i % width), int(i / width));
    }
    pos += r;
    current = !current;
  }
  return m;
}

}  // namespace geoprog
