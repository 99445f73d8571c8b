#include "geoprog/primitives.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <vector>

#include "geoprog/kernels.hpp"

namespace geoprog::prim {

const char* name(ErrKind kind) {
  switch (kind) {
    case ErrKind::EmptyMask: return "EmptyMask";
    case ErrKind::EmptyCollection: return "EmptyCollection";
    case ErrKind::TypeError: return "TypeError";
    case ErrKind::DivByZero: return "DivByZero";
    case ErrKind::DimensionMismatch: return "DimensionMismatch";
    case ErrKind::CoincidentCentroids: return "CoincidentCentroids";
    case ErrKind::NonFinite: return "NonFinite";
  }
  return "?";
}

const char* name(Quadrant q) {
  switch (q) {
    case Quadrant::TL: return "TL";
    case Quadrant::TR: return "TR";
    case Quadrant::BL: return "BL";
    case Quadrant::BR: return "BR";
  }
  return "?";
}

const char* name(Direction8 d) {
  switch (d) {
    case Direction8::E: return "E";
    case Direction8::SE: return "SE";
    case Direction8::S: return "S";
    case Direction8::SW: return "SW";
    case Direction8::W: return "W";
    case Direction8::NW: return "NW";
    case Direction8::N: return "N";
    case Direction8::NE: return "NE";
  }
  return "?";
}

namespace {

void require_same_shape(const Mask& a, const Mask& b, const char* op) {
  if (!a.same_shape(b))
    throw PrimitiveError(ErrKind::DimensionMismatch, std::string(op) + ": mask dimensions differ");
}

void require_nonempty(const Mask& m, const char* op) {
  if (!exists(m)) throw PrimitiveError(ErrKind::EmptyMask, std::string(op) + ": mask has no pixels");
}

std::vector<std::pair<int32_t, int32_t>> set_pixels(const Mask& m) {
  std::vector<std::pair<int32_t, int32_t>> out;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.test(x, y)) out.emplace_back(x, y);
  return out;
}

}  // namespace

int64_t area(const Mask& m) {
  return int64_t(kernels::active().popcount(m.words().data(), m.words().size()));
}

Box bbox(const Mask& m) {
  require_nonempty(m, "bbox");
  int ymin = -1, ymax = -1;
  // Row extent from per-row any; column extent from the OR of all rows.
  std::vector<uint64_t> colbits(m.words_per_row(), 0);
  for (int y = 0; y < m.height(); ++y) {
    const uint64_t* row = m.words().data() + size_t(y) * m.words_per_row();
    if (kernels::active().any_set(row, m.words_per_row())) {
      if (ymin < 0) ymin = y;
      ymax = y;
      kernels::active().or_into(colbits.data(), row, m.words_per_row());
    }
  }
  int xmin = -1, xmax = -1;
  for (size_t j = 0; j < colbits.size(); ++j) {
    if (!colbits[j]) continue;
    const int lo = int(j * 64) + std::countr_zero(colbits[j]);
    const int hi = int(j * 64) + 63 - std::countl_zero(colbits[j]);
    if (xmin < 0) xmin = lo;
    xmax = hi;
  }
  return Box{xmin, ymin, xmax, ymax};
}

Point centroid(const Mask& m) {
  require_nonempty(m, "centroid");
  const auto sums =
      kernels::active().coord_sums(m.words().data(), m.words_per_row(), size_t(m.height()));
  return Point{double(sums.sum_x) / double(sums.count),
               double(sums.sum_y) / double(sums.count)};
}

double orientation_deg(const Mask& m) {
  require_nonempty(m, "orientation");
  const Point c = centroid(m);
  double mu20 = 0, mu02 = 0, mu11 = 0;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.test(x, y)) {
        const double dx = x - c.x, dy = y - c.y;
        mu20 += dx * dx;
        mu02 += dy * dy;
        mu11 += dx * dy;
      }
  if (mu11 == 0.0 && mu20 == mu02) return 0.0;  // isotropic: pinned
  double theta = 0.5 * std::atan2(2.0 * mu11, mu20 - mu02) * 180.0 / std::numbers::pi;
  if (theta < 0) theta += 180.0;
  if (theta >= 180.0) theta -= 180.0;
  return theta;
}

bool overlaps(const Mask& a, const Mask& b) {
  require_same_shape(a, b, "overlaps");
  return kernels::active().any_and(a.words().data(), b.words().data(), a.words().size());
}

bool contains(const Mask& outer, const Mask& inner) {
  require_same_shape(outer, inner, "contains");
  return kernels::active().subset_of(inner.words().data(), outer.words().data(),
                                     inner.words().size());
}

namespace {

// 8-neighborhood dilation by one pixel, staying inside the grid.
Mask dilate8(const Mask& m) {
  const size_t stride = m.words_per_row();
  const int h = m.height();
  // Horizontal smear of one row into `out` (handles cross-word carries).
  auto smear_row = [&](const uint64_t* row, uint64_t* out) {
    for (size_t j = 0; j < stride; ++j) {
      uint64_t v = row[j];
      uint64_t left = v << 1;
      uint64_t right = v >> 1;
      if (j > 0) left |= row[j - 1] >> 63;
      if (j + 1 < stride) right |= row[j + 1] << 63;
      out[j] |= v | left | right;
    }
  };
  Mask out(m.width(), m.height());
  uint64_t* words = out.mutable_words();
  for (int y = 0; y < h; ++y) {
    const uint64_t* row = m.words().data() + size_t(y) * stride;
    for (int dy = -1; dy <= 1; ++dy) {
      const int ty = y + dy;
      if (ty < 0 || ty >= h) continue;
      smear_row(row, words + size_t(ty) * stride);
    }
  }
  // Clear padding bits the left-shift may have leaked into.
  const int tail = m.width() % 64;
  if (tail != 0) {
    const uint64_t keep = (uint64_t{1} << tail) - 1;
    for (int y = 0; y < h; ++y) words[size_t(y) * stride + stride - 1] &= keep;
  }
  return out;
}

}  // namespace

bool adjacent(const Mask& a, const Mask& b) {
  require_same_shape(a, b, "adjacent");
  require_nonempty(a, "adjacent");
  require_nonempty(b, "adjacent");
  if (overlaps(a, b)) return false;
  const Mask grown = dilate8(a);
  return kernels::active().any_and(grown.words().data(), b.words().data(),
                                   grown.words().size());
}

double distance(const Mask& a, const Mask& b) {
  require_same_shape(a, b, "distance");
  require_nonempty(a, "distance");
  require_nonempty(b, "distance");
  if (overlaps(a, b)) return 0.0;
  const auto pa = set_pixels(a);
  const auto pb = set_pixels(b);
  std::vector<int32_t> ax, ay, bx, by;
  ax.reserve(pa.size()), ay.reserve(pa.size());
  for (auto [x, y] : pa) ax.push_back(x), ay.push_back(y);
  bx.reserve(pb.size()), by.reserve(pb.size());
  for (auto [x, y] : pb) bx.push_back(x), by.push_back(y);
  const uint64_t d2 = kernels::active().min_pair_dist2(ax.data(), ay.data(), ax.size(),
                                                       bx.data(), by.data(), bx.size());
  return std::sqrt(double(d2));
}

Quadrant quadrant(Point pt, const ImageRef& img) {
  const double half_w = img.width / 2.0;
  const double half_h = img.height / 2.0;
  if (pt.x < half_w && pt.y < half_h) return Quadrant::TL;
  if (pt.y < half_h) return Quadrant::TR;
  if (pt.x < half_w) return Quadrant::BL;
  return Quadrant::BR;
}

Direction8 relpos(const Mask& from, const Mask& to) {
  require_same_shape(from, to, "relpos");
  const Point a = centroid(from);
  const Point b = centroid(to);
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  if (dx == 0.0 && dy == 0.0)
    throw PrimitiveError(ErrKind::CoincidentCentroids, "relpos: centroids coincide");
  double deg = std::atan2(dy, dx) * 180.0 / std::numbers::pi;  // y-down angles
  if (deg < 0) deg += 360.0;
  // Half-up at sector boundaries rounds into the clockwise (increasing-angle)
  // sector.
  const int idx = int(std::floor(deg / 45.0 + 0.5)) % 8;
  return Direction8(idx);
}

int64_t grid_cell(Point pt, const ImageRef& img, int64_t n) {
  if (n < 1) throw PrimitiveError(ErrKind::TypeError, "grid: n must be >= 1");
  auto cell_of = [n](double v, double extent) {
    auto c = int64_t(std::floor(v * double(n) / extent));
    return std::clamp<int64_t>(c, 0, n - 1);
  };
  const int64_t i = cell_of(pt.y, double(img.height));
  const int64_t j = cell_of(pt.x, double(img.width));
  return i * n + j;
}

bool in_cell(const Mask& m, int64_t cell, int64_t n) {
  require_nonempty(m, "in_cell");
  const ImageRef shape{"", m.width(), m.height()};
  return grid_cell(centroid(m), shape, n) == cell;
}

size_t nearest(const MaskSet& ms, const Mask& query) {
  if (ms.elems.empty())
    throw PrimitiveError(ErrKind::EmptyCollection, "nearest: empty mask set");
  require_nonempty(query, "nearest");
  size_t best = 0;
  double best_d = 0;
  for (size_t i = 0; i < ms.elems.size(); ++i) {
    const double d = distance(ms.elems[i], query);
    if (i == 0 || d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

MaskSet components(const Mask& m) {
  MaskSet out;
  const int w = m.width(), h = m.height();
  if (m.words().empty() || !exists(m)) return out;
  std::vector<uint8_t> seen(size_t(w) * size_t(h), 0);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m.test(x, y) || seen[size_t(y) * w + x]) continue;
      Mask comp(w, h);
      stack.assign(1, {x, y});
      seen[size_t(y) * w + x] = 1;
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        comp.set(cx, cy);
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
            if (!m.test(nx, ny) || seen[size_t(ny) * w + nx]) continue;
            seen[size_t(ny) * w + nx] = 1;
            stack.emplace_back(nx, ny);
          }
      }
      out.elems.push_back(std::move(comp));
    }
  }
  return out;
}

int64_t count(const MaskSet& ms) { return int64_t(ms.elems.size()); }

bool exists(const Mask& m) {
  return kernels::active().any_set(m.words().data(), m.words().size());
}

bool exists(const MaskSet& ms) { return !ms.elems.empty(); }

Mask union_of(const MaskSet& ms, int fallback_width, int fallback_height) {
  if (ms.elems.empty()) return Mask(fallback_width, fallback_height);
  Mask out = ms.elems.front();
  uint64_t* words = out.mutable_words();
  for (size_t i = 1; i < ms.elems.size(); ++i) {
    require_same_shape(out, ms.elems[i], "union");
    kernels::active().or_into(words, ms.elems[i].words().data(), out.words().size());
  }
  return out;
}

size_t arg_extremum(std::span<const double> vals, Extremum mode) {
  if (vals.empty())
    throw PrimitiveError(ErrKind::EmptyCollection, "arg_extremum: empty list");
  for (double v : vals)
    if (!std::isfinite(v))
      throw PrimitiveError(ErrKind::NonFinite, "arg_extremum: non-finite value");
  size_t best = 0;
  for (size_t i = 1; i < vals.size(); ++i) {
    const bool better = mode == Extremum::Min ? vals[i] < vals[best] : vals[i] > vals[best];
    if (better) best = i;
  }
  return best;
}

size_t size_extremum(const MaskSet& ms, SizeMode mode) {
  if (ms.elems.empty())
    throw PrimitiveError(ErrKind::EmptyCollection, "size_extremum: empty mask set");
  size_t best = 0;
  int64_t best_area = area(ms.elems[0]);
  for (size_t i = 1; i < ms.elems.size(); ++i) {
    const int64_t a = area(ms.elems[i]);
    const bool better = mode == SizeMode::Largest ? a > best_area : a < best_area;
    if (better) {
      best = i;
      best_area = a;
    }
  }
  return best;
}

size_t extreme(const MaskSet& ms, Cardinal dir) {
  if (ms.elems.empty())
    throw PrimitiveError(ErrKind::EmptyCollection, "extreme: empty mask set");
  size_t best = 0;
  double best_v = 0;
  for (size_t i = 0; i < ms.elems.size(); ++i) {
    const Point c = centroid(ms.elems[i]);
    double v = 0;
    switch (dir) {
      case Cardinal::N: v = -c.y; break;
      case Cardinal::S: v = c.y; break;
      case Cardinal::W: v = -c.x; break;
      case Cardinal::E: v = c.x; break;
    }
    if (i == 0 || v > best_v) {
      best = i;
      best_v = v;
    }
  }
  return best;
}

MaskSet filter_by(const MaskSet& ms, FilterKey key, CmpOp cmp, double threshold) {
  MaskSet out;
  for (const Mask& m : ms.elems) {
    double v = 0;
    switch (key) {
      case FilterKey::Area: v = double(area(m)); break;
      case FilterKey::Cx: v = centroid(m).x; break;  // throws EmptyMask on empty
      case FilterKey::Cy: v = centroid(m).y; break;
    }
    bool keep = false;
    switch (cmp) {
      case CmpOp::Lt: keep = v < threshold; break;
      case CmpOp::Le: keep = v <= threshold; break;
      case CmpOp::Gt: keep = v > threshold; break;
      case CmpOp::Ge: keep = v >= threshold; break;
      case CmpOp::Eq: keep = v == threshold; break;
    }
    if (keep) out.elems.push_back(m);
  }
  return out;
}

Point mean_position(const MaskSet& ms) {
  if (ms.elems.empty())
    throw PrimitiveError(ErrKind::EmptyCollection, "mean_position: empty mask set");
  double sx = 0, sy = 0;
  for (const Mask& m : ms.elems) {
    const Point c = centroid(m);
    sx += c.x;
    sy += c.y;
  }
  return Point{sx / double(ms.elems.size()), sy / double(ms.elems.size())};
}

}  // namespace geoprog::prim
