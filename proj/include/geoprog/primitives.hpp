#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "geoprog/error.hpp"
#include "geoprog/raster.hpp"

// The primitives library: deterministic geometric, topological, and
// aggregation operators over masks. Every function is pure; repeated calls on
// identical inputs are bit-identical. All tie-breaking is lowest-index.

namespace geoprog::prim {

enum class ErrKind {
  EmptyMask,
  EmptyCollection,
  TypeError,
  DivByZero,
  DimensionMismatch,
  CoincidentCentroids,
  NonFinite,
};

const char* name(ErrKind kind);

// The kind travels separately (failure records and outcome JSON carry it), so
// what() is the bare message.
struct PrimitiveError : Error {
  PrimitiveError(ErrKind k, const std::string& msg) : Error(msg), kind(k) {}
  ErrKind kind;
};

enum class Quadrant { TL, TR, BL, BR };
// Sector order matches the y-down angle sweep from +x, 45 degrees apart.
enum class Direction8 { E, SE, S, SW, W, NW, N, NE };
enum class Cardinal { N, S, E, W };
enum class Extremum { Min, Max };
enum class SizeMode { Largest, Smallest };
enum class FilterKey { Area, Cx, Cy };
enum class CmpOp { Lt, Le, Gt, Ge, Eq };

const char* name(Quadrant q);
const char* name(Direction8 d);

// -- geometric --------------------------------------------------------------

int64_t area(const Mask& m);
Box bbox(const Mask& m);          // EmptyMask
Point centroid(const Mask& m);    // EmptyMask
// Principal-axis angle in degrees within [0, 180), measured from +x toward
// +y via central second moments; isotropic masks (including single pixels)
// pin to 0.
double orientation_deg(const Mask& m);  // EmptyMask

// -- topological -------------------------------------------------------------

bool overlaps(const Mask& a, const Mask& b);                // DimensionMismatch
bool contains(const Mask& outer, const Mask& inner);        // DimensionMismatch
// Disjoint and touching in the 8-neighborhood (minimum Chebyshev distance 1).
bool adjacent(const Mask& a, const Mask& b);                // EmptyMask, DimensionMismatch
// Minimum Euclidean distance between set-pixel centers; 0 when overlapping.
double distance(const Mask& a, const Mask& b);              // EmptyMask, DimensionMismatch
Quadrant quadrant(Point pt, const ImageRef& img);
// Direction of centroid(to) - centroid(from), bucketed into eight 45-degree
// sectors; boundary angles round half-up into the clockwise sector.
Direction8 relpos(const Mask& from, const Mask& to);        // EmptyMask, CoincidentCentroids
// Row-major cell index on an n x n grid; coordinates clamp into range.
int64_t grid_cell(Point pt, const ImageRef& img, int64_t n);
bool in_cell(const Mask& m, int64_t cell, int64_t n);       // EmptyMask
size_t nearest(const MaskSet& ms, const Mask& query);       // EmptyCollection, EmptyMask

// -- aggregation ---------------------------------------------------------------

// 8-connected components ordered by first set pixel in row-major scan.
MaskSet components(const Mask& m);
int64_t count(const MaskSet& ms);
bool exists(const Mask& m);
bool exists(const MaskSet& ms);
// Pixelwise OR; an empty collection yields an all-false mask of the given
// fallback dimensions.
Mask union_of(const MaskSet& ms, int fallback_width, int fallback_height);
size_t arg_extremum(std::span<const double> vals, Extremum mode);  // EmptyCollection, NonFinite
size_t size_extremum(const MaskSet& ms, SizeMode mode);            // EmptyCollection
size_t extreme(const MaskSet& ms, Cardinal dir);                   // EmptyCollection, EmptyMask
MaskSet filter_by(const MaskSet& ms, FilterKey key, CmpOp cmp, double threshold);
Point mean_position(const MaskSet& ms);                            // EmptyCollection, EmptyMask

}  // namespace geoprog::prim
