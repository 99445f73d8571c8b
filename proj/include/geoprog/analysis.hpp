#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "geoprog/bank.hpp"

// Question/program taxonomy and primitive-usage analysis: the nine question
// dimensions with deterministic mapping rules, exact AST-based program
// classification, and corpus statistics (per-primitive usage counts plus
// dimension co-occurrence).

namespace geoprog {

enum class Dimension {
  Existence,
  Quantity,
  Coverage,
  Comparison,
  Category,
  Relation,
  Scene,
  Direction,
  Overlap,
};
constexpr size_t kDimensionCount = 9;
const char* dimension_name(Dimension d);

class DimensionSet {
 public:
  void add(Dimension d) { bits_ |= 1u << size_t(d); }
  void remove(Dimension d) { bits_ &= ~(1u << size_t(d)); }
  bool has(Dimension d) const { return bits_ & (1u << size_t(d)); }
  bool empty() const { return bits_ == 0; }
  bool operator==(const DimensionSet&) const = default;

  std::vector<Dimension> items() const;
  std::string to_string() const;  // e.g. "{Coverage, Comparison, Scene}"

 private:
  unsigned bits_ = 0;
};

// Editable vocabularies, one term per line. The object list is a documented
// approximation (19 classes); scene classes are the fixed eleven; direction
// tokens cover compass abbreviations, quadrant abbreviations, and spelled-out
// names.
struct Vocab {
  std::vector<std::string> object_classes;
  std::vector<std::string> scene_classes;
  std::vector<std::string> direction_tokens;

  static Vocab builtin();
  static Vocab load_dir(const std::filesystem::path& dir);  // falls back to builtin lists
};

// Regex triggers over lower-cased text, then the two override rules:
// Comparison drops Existence; Scene drops Existence when no explicit
// existence trigger matched.
DimensionSet classify_question(std::string_view question, const Vocab& vocab);

// Exact AST walk: operational dimensions from call heads, Category/Scene from
// string literals against the vocabularies, Direction from direction-token
// literals or the quadrant/relpos heads.
DimensionSet classify_program(const ProgramSource& program, const Vocab& vocab);

// Primitive heads present in the AST, merged to canonical names
// ("argmin/argmax", "largest/smallest"); the segment tool is reported apart.
std::set<std::string> detect_primitives(const ProgramSource& program);
bool uses_segment_tool(const ProgramSource& program);

struct UsageReport {
  size_t corpus_size = 0;
  std::map<std::string, size_t> primitive_counts;  // once per program
  size_t segment_count = 0;
  std::array<size_t, kDimensionCount> node_weights{};
  std::array<std::array<size_t, kDimensionCount>, kDimensionCount> edges{};  // symmetric

  nlohmann::json to_json() const;
  std::string primitives_csv() const;
  std::string dimensions_csv() const;
  std::string cooccurrence_csv() const;
};

// Per-problem dimensions are classify_question(q) united with
// classify_program(p); primitive counts come from the program AST.
UsageReport corpus_stats(std::span<const Problem> problems, const Vocab& vocab);

}  // namespace geoprog
