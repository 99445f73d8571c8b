#include <doctest.h>

#include <cmath>
#include <cstring>
#include <functional>

#include "geoprog/kernels.hpp"
#include "geoprog/primitives.hpp"
#include "support/oracles.hpp"

using namespace geoprog;
using namespace geoprog::prim;

namespace {

// Worked examples on a 4x4 grid: A = 2x2 block at the origin, B = single
// far-corner pixel, C = single pixel adjacent to A's corner.
Mask make_A() { return Mask::from_pixels(4, 4, {{0, 0}, {1, 0}, {0, 1}, {1, 1}}); }
Mask make_B() { return Mask::from_pixels(4, 4, {{3, 3}}); }
Mask make_C() { return Mask::from_pixels(4, 4, {{2, 1}}); }

Mask mask_or(const Mask& a, const Mask& b) {
  Mask out = a;
  for (int y = 0; y < b.height(); ++y)
    for (int x = 0; x < b.width(); ++x)
      if (b.test(x, y)) out.set(x, y);
  return out;
}

ErrKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const PrimitiveError& e) {
    return e.kind;
  }
  FAIL("expected a PrimitiveError");
  return ErrKind::TypeError;
}

}  // namespace

TEST_CASE("area counts set pixels") {
  CHECK(area(make_A()) == 4);
  CHECK(area(Mask(4, 4)) == 0);
  Mask full(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) full.set(x, y);
  CHECK(area(full) == 16);
}

TEST_CASE("bbox is the tightest inclusive box") {
  CHECK(bbox(make_A()) == Box{0, 0, 1, 1});
  CHECK(bbox(make_B()) == Box{3, 3, 3, 3});
  CHECK(bbox(mask_or(make_A(), make_B())) == Box{0, 0, 3, 3});
  CHECK(kind_of([] { bbox(Mask(4, 4)); }) == ErrKind::EmptyMask);
}

TEST_CASE("bbox of a single pixel is that pixel") {
  Rng rng = derive_rng({21, 0});
  for (int trial = 0; trial < 100; ++trial) {
    const int w = 1 + int(uniform_below(rng, 20));
    const int h = 1 + int(uniform_below(rng, 20));
    const int x = int(uniform_below(rng, uint64_t(w)));
    const int y = int(uniform_below(rng, uint64_t(h)));
    Mask m(w, h);
    m.set(x, y);
    CHECK(bbox(m) == Box{x, y, x, y});
  }
}

TEST_CASE("centroid is the mean of set pixels") {
  CHECK(centroid(make_A()) == Point{0.5, 0.5});
  CHECK(centroid(make_B()) == Point{3.0, 3.0});
  CHECK(centroid(mask_or(make_A(), make_B())) == Point{1.0, 1.0});
  CHECK(kind_of([] { centroid(Mask(4, 4)); }) == ErrKind::EmptyMask);
}

TEST_CASE("orientation of axis-aligned lines and degenerate masks") {
  CHECK(orientation_deg(Mask::from_pixels(4, 4, {{0, 0}, {1, 0}, {2, 0}})) ==
        doctest::Approx(0.0));
  CHECK(orientation_deg(Mask::from_pixels(4, 4, {{0, 0}, {0, 1}, {0, 2}})) ==
        doctest::Approx(90.0));
  CHECK(orientation_deg(make_B()) == 0.0);
  // The diagonal runs from +x toward +y by 45 degrees in screen coordinates.
  CHECK(orientation_deg(Mask::from_pixels(4, 4, {{0, 0}, {1, 1}, {2, 2}})) ==
        doctest::Approx(45.0));
}

TEST_CASE("overlaps / contains") {
  const Mask A = make_A(), B = make_B();
  CHECK(overlaps(A, A));
  CHECK_FALSE(overlaps(A, B));
  CHECK(overlaps(A, Mask::from_pixels(4, 4, {{1, 1}, {3, 0}})));
  CHECK(kind_of([&] { overlaps(A, Mask(5, 5)); }) == ErrKind::DimensionMismatch);

  CHECK(contains(A, A));
  CHECK(contains(A, Mask::from_pixels(4, 4, {{0, 0}})));
  CHECK_FALSE(contains(Mask::from_pixels(4, 4, {{0, 0}}), A));
}

TEST_CASE("adjacent means disjoint plus Chebyshev distance one") {
  const Mask A = make_A(), B = make_B(), C = make_C();
  CHECK(adjacent(A, C));        // Chebyshev((1,1),(2,1)) = 1
  CHECK_FALSE(adjacent(A, B));  // Chebyshev = 2
  CHECK_FALSE(adjacent(A, A));  // overlap excluded
  CHECK(kind_of([&] { adjacent(A, Mask(4, 4)); }) == ErrKind::EmptyMask);
}

TEST_CASE("adjacent agrees with a pixel-pair Chebyshev oracle") {
  Rng rng = derive_rng({21, 5});
  for (int trial = 0; trial < 200; ++trial) {
    Mask a = oracle::random_mask(rng, 8);
    Mask b = oracle::random_mask(rng, 8);
    if (a.width() != b.width() || a.height() != b.height()) continue;
    if (!prim::exists(a) || !prim::exists(b)) continue;
    int cheb = 1 << 20;
    bool overlap = false;
    for (auto [ax, ay] : oracle::pixels(a))
      for (auto [bx, by] : oracle::pixels(b)) {
        const int d = std::max(std::abs(ax - bx), std::abs(ay - by));
        cheb = std::min(cheb, d);
        overlap |= d == 0;
      }
    CHECK(adjacent(a, b) == (!overlap && cheb == 1));
  }
}

TEST_CASE("distance examples and properties") {
  const Mask A = make_A(), B = make_B(), C = make_C();
  CHECK(distance(A, B) == doctest::Approx(std::sqrt(8.0)).epsilon(1e-12));
  CHECK(distance(A, C) == doctest::Approx(1.0));
  CHECK(distance(A, A) == 0.0);
  CHECK(kind_of([&] { distance(A, Mask(4, 4)); }) == ErrKind::EmptyMask);

  Rng rng = derive_rng({21, 1});
  for (int trial = 0; trial < 100; ++trial) {
    Mask a = oracle::random_nonempty_mask(rng, 10);
    Mask b(a.width(), a.height()), c(a.width(), a.height());
    b.set(int(uniform_below(rng, uint64_t(a.width()))),
          int(uniform_below(rng, uint64_t(a.height()))));
    c.set(int(uniform_below(rng, uint64_t(a.width()))),
          int(uniform_below(rng, uint64_t(a.height()))));
    CHECK(distance(a, b) == distance(b, a));  // symmetry
    CHECK(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9);  // pixel-set triangle
  }
}

TEST_CASE("quadrant matches the strict-inequality conditional") {
  const ImageRef img{"q", 4, 4};
  CHECK(quadrant({0.5, 0.5}, img) == Quadrant::TL);
  CHECK(quadrant({3, 3}, img) == Quadrant::BR);
  CHECK(quadrant({2, 1}, img) == Quadrant::TR);  // x = W/2 goes right

  Rng rng = derive_rng({21, 2});
  for (int trial = 0; trial < 10000; ++trial) {
    const ImageRef r{"r", 1 + int(uniform_below(rng, 100)), 1 + int(uniform_below(rng, 100))};
    const Point pt{uniform_unit(rng) * r.width, uniform_unit(rng) * r.height};
    const double W = r.width, H = r.height;
    const char* expected = (pt.x < W / 2 && pt.y < H / 2) ? "TL"
                           : (pt.y < H / 2)               ? "TR"
                           : (pt.x < W / 2)               ? "BL"
                                                          : "BR";
    CHECK(std::string(name(quadrant(pt, r))) == expected);
  }
}

TEST_CASE("relpos buckets centroid direction into eight sectors") {
  const Mask A = make_A(), B = make_B();
  CHECK(relpos(A, B) == Direction8::SE);
  CHECK(relpos(B, A) == Direction8::NW);
  CHECK(relpos(A, Mask::from_pixels(4, 4, {{3, 0}, {3, 1}})) == Direction8::E);
  CHECK(kind_of([&] { relpos(A, A); }) == ErrKind::CoincidentCentroids);

  // Opposite sectors whenever neither call errors.
  Rng rng = derive_rng({21, 3});
  int checked = 0;
  while (checked < 100) {
    Mask a = oracle::random_mask(rng, 8);
    Mask b = oracle::random_mask(rng, 8);
    if (a.width() != b.width() || a.height() != b.height()) continue;
    if (!prim::exists(a) || !prim::exists(b)) continue;
    try {
      const auto fwd = relpos(a, b);
      const auto rev = relpos(b, a);
      CHECK((int(fwd) + 4) % 8 == int(rev));
      ++checked;
    } catch (const PrimitiveError&) {
      // coincident centroids: skip
    }
  }
}

TEST_CASE("relpos boundary angles round half-up clockwise") {
  // Exact 45-degree boundary between E (centered 0) and SE (centered 45) is
  // at 22.5; dy/dx = tan(22.5) has no tidy mask, so check the 45-degree
  // diagonal lands in SE and the perfect E stays E.
  Mask from = Mask::from_pixels(8, 8, {{0, 0}});
  CHECK(relpos(from, Mask::from_pixels(8, 8, {{4, 4}})) == Direction8::SE);
  CHECK(relpos(from, Mask::from_pixels(8, 8, {{4, 0}})) == Direction8::E);
  CHECK(relpos(from, Mask::from_pixels(8, 8, {{0, 4}})) == Direction8::S);
}

TEST_CASE("grid_cell clamps and indexes row-major") {
  const ImageRef img{"g", 4, 4};
  CHECK(grid_cell({0.5, 0.5}, img, 2) == 0);
  CHECK(grid_cell({3, 3}, img, 2) == 3);
  CHECK(grid_cell({3.9, 0.1}, img, 4) == 3);
  CHECK(grid_cell({-5, 99}, img, 2) == 2);  // clamped
  CHECK(in_cell(make_B(), 3, 2));
  CHECK_FALSE(in_cell(make_B(), 0, 2));
}

TEST_CASE("nearest picks the minimum-distance element, lowest index on ties") {
  const Mask A = make_A(), B = make_B(), C = make_C();
  CHECK(nearest(MaskSet{{B, C}}, A) == 1);
  CHECK(nearest(MaskSet{{A}}, A) == 0);
  CHECK(nearest(MaskSet{{B, B}}, A) == 0);
  CHECK(kind_of([&] { nearest(MaskSet{}, A); }) == ErrKind::EmptyCollection);
  CHECK(kind_of([&] { nearest(MaskSet{{A}}, Mask(4, 4)); }) == ErrKind::EmptyMask);
}

TEST_CASE("components: 8-connected, ordered by first row-major pixel") {
  const auto two = components(Mask::from_pixels(4, 4, {{0, 0}, {3, 3}}));
  REQUIRE(two.elems.size() == 2);
  CHECK(two.elems[0] == Mask::from_pixels(4, 4, {{0, 0}}));
  CHECK(two.elems[1] == Mask::from_pixels(4, 4, {{3, 3}}));

  const auto one = components(make_A());
  REQUIRE(one.elems.size() == 1);
  CHECK(one.elems[0] == make_A());

  CHECK(components(Mask(4, 4)).elems.empty());

  // Diagonal touch is a single component under 8-connectivity.
  CHECK(components(Mask::from_pixels(4, 4, {{0, 0}, {1, 1}})).elems.size() == 1);
}

TEST_CASE("components matches the flood-fill oracle exhaustively on 4x4") {
  for (uint32_t bits = 0; bits < (1u << 16); ++bits) {
    Mask m(4, 4);
    for (int i = 0; i < 16; ++i)
      if ((bits >> i) & 1) m.set(i % 4, i / 4);
    const auto got = components(m);
    const auto want = oracle::components(m);
    REQUIRE(got.elems.size() == want.size());
    for (size_t i = 0; i < want.size(); ++i) CHECK(got.elems[i] == want[i]);
  }
}

TEST_CASE("components matches the oracle on random 6x6 and 16x16 masks") {
  Rng rng = derive_rng({21, 4});
  for (int trial = 0; trial < 300; ++trial) {
    const int side = trial % 2 == 0 ? 6 : 16;
    Mask m(side, side);
    const double p = uniform_unit(rng);
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x)
        if (flip(rng, p)) m.set(x, y);
    const auto got = components(m);
    const auto want = oracle::components(m);
    REQUIRE(got.elems.size() == want.size());
    for (size_t i = 0; i < want.size(); ++i) CHECK(got.elems[i] == want[i]);
  }
}

TEST_CASE("count / exists / union") {
  const Mask A = make_A(), B = make_B(), C = make_C();
  CHECK(count(MaskSet{}) == 0);
  CHECK(count(MaskSet{{A}}) == 1);
  CHECK(count(MaskSet{{A, B, C}}) == 3);

  CHECK_FALSE(exists(Mask(4, 4)));
  CHECK(exists(A));
  CHECK_FALSE(exists(MaskSet{}));
  CHECK(exists(MaskSet{{Mask(4, 4)}}));  // nonempty collection of empty masks

  CHECK(area(union_of(MaskSet{{A, B}}, 4, 4)) == 5);
  CHECK(union_of(MaskSet{{A, A}}, 4, 4) == A);
  CHECK(union_of(MaskSet{}, 4, 4) == Mask(4, 4));
}

TEST_CASE("union area never exceeds the element sum") {
  Rng rng = derive_rng({21, 6});
  for (int trial = 0; trial < 100; ++trial) {
    const int side = 1 + int(uniform_below(rng, 12));
    MaskSet ms;
    int64_t sum = 0;
    bool disjoint = true;
    for (size_t i = 0; i < 1 + uniform_below(rng, 4); ++i) {
      Mask m(side, side);
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
          if (flip(rng, 0.3)) m.set(x, y);
      for (const Mask& prev : ms.elems) disjoint &= !overlaps(prev, m);
      sum += area(m);
      ms.elems.push_back(std::move(m));
    }
    const int64_t u = area(union_of(ms, side, side));
    CHECK(u <= sum);
    if (disjoint) CHECK(u == sum);
    if (ms.elems.size() == 1) CHECK(u == area(ms.elems[0]));
  }
}

TEST_CASE("arg_extremum with lowest-index ties") {
  const double max_case[] = {3, 7, 7};
  CHECK(arg_extremum(max_case, Extremum::Max) == 1);
  const double min_case[] = {2, 2, 5};
  CHECK(arg_extremum(min_case, Extremum::Min) == 0);
  const double single[] = {-1};
  CHECK(arg_extremum(single, Extremum::Max) == 0);
  CHECK(kind_of([] { arg_extremum({}, Extremum::Max); }) == ErrKind::EmptyCollection);
  const double bad[] = {1.0, std::nan("")};
  CHECK(kind_of([&] { arg_extremum(bad, Extremum::Max); }) == ErrKind::NonFinite);
}

TEST_CASE("size_extremum and extreme") {
  const Mask A = make_A(), B = make_B();
  CHECK(size_extremum(MaskSet{{A, B}}, SizeMode::Largest) == 0);
  CHECK(size_extremum(MaskSet{{A, B}}, SizeMode::Smallest) == 1);
  CHECK(size_extremum(MaskSet{{B, B}}, SizeMode::Largest) == 0);

  CHECK(extreme(MaskSet{{A, B}}, Cardinal::N) == 0);
  CHECK(extreme(MaskSet{{A, B}}, Cardinal::E) == 1);
  CHECK(extreme(MaskSet{{A}}, Cardinal::S) == 0);
}

TEST_CASE("filter_by with the closed key/comparator vocabulary") {
  const Mask A = make_A(), B = make_B();
  const MaskSet ms{{A, B}};
  auto ids = [](const MaskSet& s) { return s.elems.size(); };
  CHECK(filter_by(ms, FilterKey::Area, CmpOp::Gt, 2).elems == std::vector<Mask>{A});
  CHECK(filter_by(ms, FilterKey::Cx, CmpOp::Lt, 2.0).elems == std::vector<Mask>{A});
  CHECK(ids(filter_by(ms, FilterKey::Area, CmpOp::Ge, 0)) == 2);
  CHECK(kind_of([&] {
          filter_by(MaskSet{{Mask(4, 4)}}, FilterKey::Cx, CmpOp::Lt, 1);
        }) == ErrKind::EmptyMask);
}

TEST_CASE("mean_position averages element centroids") {
  const Mask A = make_A(), B = make_B();
  CHECK(mean_position(MaskSet{{A, B}}) == Point{1.75, 1.75});
  CHECK(mean_position(MaskSet{{A}}) == Point{0.5, 0.5});
  CHECK(mean_position(MaskSet{{B, B}}) == Point{3.0, 3.0});
  CHECK(kind_of([] { mean_position(MaskSet{}); }) == ErrKind::EmptyCollection);
}

TEST_CASE("wide masks (multi-word rows) agree with the oracles") {
  Rng rng = derive_rng({21, 9});
  for (int trial = 0; trial < 60; ++trial) {
    const int w = 65 + int(uniform_below(rng, 80));  // spans 2-3 words per row
    const int h = 2 + int(uniform_below(rng, 12));
    Mask a(w, h), b(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (flip(rng, 0.08)) a.set(x, y);
        if (flip(rng, 0.05)) b.set(x, y);
      }
    if (!prim::exists(a) || !prim::exists(b)) continue;

    CHECK(area(a) == oracle::area(a));
    CHECK(bbox(a) == oracle::bbox(a));
    const Point got = centroid(a), want = oracle::centroid(a);
    CHECK(got.x == doctest::Approx(want.x).epsilon(1e-12));
    CHECK(got.y == doctest::Approx(want.y).epsilon(1e-12));
    CHECK(distance(a, b) == doctest::Approx(oracle::distance(a, b)).epsilon(1e-12));

    const auto comp = components(a);
    const auto comp_want = oracle::components(a);
    REQUIRE(comp.elems.size() == comp_want.size());
    for (size_t i = 0; i < comp_want.size(); ++i) CHECK(comp.elems[i] == comp_want[i]);

    int cheb = 1 << 20;
    for (auto [ax, ay] : oracle::pixels(a))
      for (auto [bx, by] : oracle::pixels(b))
        cheb = std::min(cheb, std::max(std::abs(ax - bx), std::abs(ay - by)));
    CHECK(adjacent(a, b) == (cheb == 1));
  }
}

TEST_CASE("dilation carries across word boundaries") {
  // Column 63 sits at the end of word 0, column 64 at the start of word 1.
  Mask at63 = Mask::from_pixels(130, 3, {{63, 1}});
  Mask at64 = Mask::from_pixels(130, 3, {{64, 1}});
  Mask at65 = Mask::from_pixels(130, 3, {{65, 1}});
  CHECK(adjacent(at63, at64));
  CHECK(adjacent(at64, at65));
  CHECK_FALSE(adjacent(at63, at65));  // Chebyshev distance 2
}

TEST_CASE("primitives are pure: repeated calls are bit-identical") {
  Rng rng = derive_rng({21, 7});
  const Mask m = oracle::random_nonempty_mask(rng, 12);
  const Point c1 = centroid(m);
  const Point c2 = centroid(m);
  CHECK(std::memcmp(&c1, &c2, sizeof c1) == 0);
  CHECK(orientation_deg(m) == orientation_deg(m));
  CHECK(components(m).elems == components(m).elems);
}

TEST_CASE("primitive results are lane-independent") {
  if (!kernels::avx2_ops()) return;
  Rng rng = derive_rng({21, 8});
  for (int trial = 0; trial < 50; ++trial) {
    const Mask a = oracle::random_nonempty_mask(rng, 20);
    Mask b(a.width(), a.height());
    b.set(int(uniform_below(rng, uint64_t(a.width()))),
          int(uniform_below(rng, uint64_t(a.height()))));

    kernels::set_active(kernels::scalar_ops());
    const auto area_s = area(a);
    const auto cen_s = centroid(a);
    const auto box_s = bbox(a);
    const auto dist_s = distance(a, b);

    kernels::set_active(*kernels::avx2_ops());
    CHECK(area(a) == area_s);
    CHECK(centroid(a) == cen_s);
    CHECK(bbox(a) == box_s);
    CHECK(distance(a, b) == dist_s);
  }
  kernels::set_active(kernels::avx2_ops() ? *kernels::avx2_ops() : kernels::scalar_ops());
}
