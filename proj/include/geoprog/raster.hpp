#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "geoprog/error.hpp"

// Raster data model. Everything here is immutable by convention after
// construction and safe to share across concurrent evaluators.

namespace geoprog {

struct ImageRef {
  std::string id;
  int width = 0;
  int height = 0;

  bool operator==(const ImageRef&) const = default;
};

// Pixel coordinates: x indexes columns left to right, y indexes rows top to
// bottom (screen convention).
struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

// Inclusive pixel ranges; pixel-count area is (xmax-xmin+1)*(ymax-ymin+1).
struct Box {
  int xmin = 0;
  int ymin = 0;
  int xmax = 0;
  int ymax = 0;

  bool operator==(const Box&) const = default;
  int64_t pixel_area() const {
    return int64_t(xmax - xmin + 1) * int64_t(ymax - ymin + 1);
  }
};

// Binary raster mask, bit-packed 64 pixels per word, row major. Bits at and
// beyond `width` in the last word of each row are always zero.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height);

  static Mask from_pixels(int width, int height,
                          const std::vector<std::pair<int, int>>& xy);

  int width() const { return width_; }
  int height() const { return height_; }
  size_t words_per_row() const { return stride_; }
  const std::vector<uint64_t>& words() const { return words_; }
  uint64_t* mutable_words() { return words_.data(); }  // kernel writes only

  bool test(int x, int y) const {
    return (words_[size_t(y) * stride_ + size_t(x) / 64] >> (x % 64)) & 1;
  }
  void set(int x, int y, bool value = true);

  bool same_shape(const Mask& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }
  bool operator==(const Mask&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  size_t stride_ = 0;
  std::vector<uint64_t> words_;
};

// Ordered mask collection; producers define the element order (components
// orders by first set pixel in row-major scan, the segmenter preserves index
// order).
struct MaskSet {
  std::vector<Mask> elems;

  bool operator==(const MaskSet&) const = default;
};

// Zero-first run-length encoding, row major: alternating run lengths starting
// with the count of false pixels; runs sum to width*height.
std::vector<int64_t> rle_encode(const Mask& mask);

// Inverse of rle_encode. Throws SchemaError when runs are negative or do not
// sum to width*height.
Mask rle_decode(const std::vector<int64_t>& runs, int width, int height);

}  // namespace geoprog
