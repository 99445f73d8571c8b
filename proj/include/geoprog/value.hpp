#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "geoprog/raster.hpp"

// The closed result domain of program execution. The Scorable subset
// (Int/Float/Bool/Str/Box) is what verifiers accept; Image is the runtime
// binding of the `image` variable and never serializes into bank records.

namespace geoprog {

class Value;
using ValueList = std::vector<Value>;

enum class ValueKind { Int, Float, Bool, Str, Point, Box, Mask, MaskSet, List, Image };

const char* kind_name(ValueKind k);

class Value {
 public:
  Value() : v_(int64_t{0}) {}

  static Value integer(int64_t v) { return Value(Repr(std::in_place_index<0>, v)); }
  static Value real(double v) { return Value(Repr(std::in_place_index<1>, v)); }
  static Value boolean(bool v) { return Value(Repr(std::in_place_index<2>, v)); }
  static Value str(std::string v) { return Value(Repr(std::in_place_index<3>, std::move(v))); }
  static Value point(Point v) { return Value(Repr(std::in_place_index<4>, v)); }
  static Value box(Box v) { return Value(Repr(std::in_place_index<5>, v)); }
  static Value mask(Mask v) { return Value(Repr(std::in_place_index<6>, std::move(v))); }
  static Value mask_set(MaskSet v) { return Value(Repr(std::in_place_index<7>, std::move(v))); }
  static Value list(ValueList v) { return Value(Repr(std::in_place_index<8>, std::move(v))); }
  static Value image(ImageRef v) { return Value(Repr(std::in_place_index<9>, std::move(v))); }

  ValueKind kind() const { return ValueKind(v_.index()); }

  int64_t as_int() const { return std::get<0>(v_); }
  double as_float() const { return std::get<1>(v_); }
  bool as_bool() const { return std::get<2>(v_); }
  const std::string& as_str() const { return std::get<3>(v_); }
  const Point& as_point() const { return std::get<4>(v_); }
  const Box& as_box() const { return std::get<5>(v_); }
  const Mask& as_mask() const { return std::get<6>(v_); }
  const MaskSet& as_mask_set() const { return std::get<7>(v_); }
  const ValueList& as_list() const { return std::get<8>(v_); }
  const ImageRef& as_image() const { return std::get<9>(v_); }

  bool is_numeric() const { return kind() == ValueKind::Int || kind() == ValueKind::Float; }
  double numeric() const { return kind() == ValueKind::Int ? double(as_int()) : as_float(); }
  bool is_scorable() const {
    switch (kind()) {
      case ValueKind::Int:
      case ValueKind::Float:
      case ValueKind::Bool:
      case ValueKind::Str:
      case ValueKind::Box:
        return true;
      default:
        return false;
    }
  }

 private:
  using Repr = std::variant<int64_t, double, bool, std::string, Point, Box, Mask,
                            MaskSet, ValueList, ImageRef>;
  explicit Value(Repr v) : v_(std::move(v)) {}
  Repr v_;
};

// Verifier equality over Scorable values: Bool/Box exact, Str equal after
// phrase normalization, numerics within max(1e-9, 1e-9*|b|). Different
// scorable branches (with Int/Float unified as numeric) compare unequal.
// Throws PrimitiveError(TypeError) on non-Scorable operands.
bool value_equal(const Value& a, const Value& b);

// Bit-exact structural equality over the whole domain (doubles compared by
// bit pattern); used by determinism checks.
bool exact_equal(const Value& a, const Value& b);

// Tagged JSON: {"t":"int|float|bool|str|box|list|point|mask|maskset","v":...}.
// Bank records restrict args/outputs to the first six tags; the rest exist
// for display (cmd exec output). Image never serializes.
nlohmann::json value_to_json(const Value& v);
Value value_from_json(const nlohmann::json& j);  // throws SchemaError

}  // namespace geoprog
