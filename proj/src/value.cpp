#include "geoprog/value.hpp"

#include <cmath>
#include <cstring>

#include "geoprog/primitives.hpp"
#include "geoprog/tools.hpp"

namespace geoprog {

using nlohmann::json;

const char* kind_name(ValueKind k) {
  switch (k) {
    case ValueKind::Int: return "int";
    case ValueKind::Float: return "float";
    case ValueKind::Bool: return "bool";
    case ValueKind::Str: return "str";
    case ValueKind::Point: return "point";
    case ValueKind::Box: return "box";
    case ValueKind::Mask: return "mask";
    case ValueKind::MaskSet: return "maskset";
    case ValueKind::List: return "list";
    case ValueKind::Image: return "image";
  }
  return "?";
}

bool value_equal(const Value& a, const Value& b) {
  if (!a.is_scorable() || !b.is_scorable())
    throw prim::PrimitiveError(prim::ErrKind::TypeError,
                               "value_equal requires scorable values");
  if (a.is_numeric() && b.is_numeric()) {
    const double x = a.numeric(), y = b.numeric();
    return std::abs(x - y) <= std::max(1e-9, 1e-9 * std::abs(y));
  }
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case ValueKind::Bool: return a.as_bool() == b.as_bool();
    case ValueKind::Str: return normalize_phrase(a.as_str()) == normalize_phrase(b.as_str());
    case ValueKind::Box: return a.as_box() == b.as_box();
    default: return false;
  }
}

namespace {

bool bits_equal(double a, double b) {
  uint64_t ba, bb;
  std::memcpy(&ba, &a, 8);
  std::memcpy(&bb, &b, 8);
  return ba == bb;
}

}  // namespace

bool exact_equal(const Value& a, const Value& b) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case ValueKind::Int: return a.as_int() == b.as_int();
    case ValueKind::Float: return bits_equal(a.as_float(), b.as_float());
    case ValueKind::Bool: return a.as_bool() == b.as_bool();
    case ValueKind::Str: return a.as_str() == b.as_str();
    case ValueKind::Point:
      return bits_equal(a.as_point().x, b.as_point().x) &&
             bits_equal(a.as_point().y, b.as_point().y);
    case ValueKind::Box: return a.as_box() == b.as_box();
    case ValueKind::Mask: return a.as_mask() == b.as_mask();
    case ValueKind::MaskSet: return a.as_mask_set() == b.as_mask_set();
    case ValueKind::List: {
      const auto& la = a.as_list();
      const auto& lb = b.as_list();
      if (la.size() != lb.size()) return false;
      for (size_t i = 0; i < la.size(); ++i)
        if (!exact_equal(la[i], lb[i])) return false;
      return true;
    }
    case ValueKind::Image: return a.as_image() == b.as_image();
  }
  return false;
}

json value_to_json(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Int: return {{"t", "int"}, {"v", v.as_int()}};
    case ValueKind::Float: return {{"t", "float"}, {"v", v.as_float()}};
    case ValueKind::Bool: return {{"t", "bool"}, {"v", v.as_bool()}};
    case ValueKind::Str: return {{"t", "str"}, {"v", v.as_str()}};
    case ValueKind::Point:
      return {{"t", "point"}, {"v", {v.as_point().x, v.as_point().y}}};
    case ValueKind::Box: {
      const Box& b = v.as_box();
      return {{"t", "box"}, {"v", {b.xmin, b.ymin, b.xmax, b.ymax}}};
    }
    case ValueKind::Mask: {
      const Mask& m = v.as_mask();
      return {{"t", "mask"},
              {"v", {{"w", m.width()}, {"h", m.height()}, {"rle", rle_encode(m)}}}};
    }
    case ValueKind::MaskSet: {
      json arr = json::array();
      for (const Mask& m : v.as_mask_set().elems)
        arr.push_back({{"w", m.width()}, {"h", m.height()}, {"rle", rle_encode(m)}});
      return {{"t", "maskset"}, {"v", arr}};
    }
    case ValueKind::List: {
      json arr = json::array();
      for (const Value& e : v.as_list()) arr.push_back(value_to_json(e));
      return {{"t", "list"}, {"v", arr}};
    }
    case ValueKind::Image:
      throw Error("image values do not serialize");
  }
  throw Error("unreachable value kind");
}

Value value_from_json(const json& j) {
  if (!j.is_object() || !j.contains("t") || !j.contains("v"))
    throw SchemaError("value: expected {\"t\":...,\"v\":...}");
  const std::string t = j.at("t").get<std::string>();
  const json& v = j.at("v");
  try {
    if (t == "int") return Value::integer(v.get<int64_t>());
    if (t == "float") return Value::real(v.get<double>());
    if (t == "bool") return Value::boolean(v.get<bool>());
    if (t == "str") return Value::str(v.get<std::string>());
    if (t == "point") return Value::point(Point{v.at(0).get<double>(), v.at(1).get<double>()});
    if (t == "box")
      return Value::box(Box{v.at(0).get<int>(), v.at(1).get<int>(), v.at(2).get<int>(),
                            v.at(3).get<int>()});
    if (t == "mask")
      return Value::mask(rle_decode(v.at("rle").get<std::vector<int64_t>>(),
                                    v.at("w").get<int>(), v.at("h").get<int>()));
    if (t == "maskset") {
      MaskSet ms;
      for (const json& jm : v)
        ms.elems.push_back(rle_decode(jm.at("rle").get<std::vector<int64_t>>(),
                                      jm.at("w").get<int>(), jm.at("h").get<int>()));
      return Value::mask_set(std::move(ms));
    }
    if (t == "list") {
      ValueList out;
      for (const json& je : v) out.push_back(value_from_json(je));
      return Value::list(std::move(out));
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("value: ") + e.what());
  }
  throw SchemaError("value: unknown tag: " + t);
}

}  // namespace geoprog
