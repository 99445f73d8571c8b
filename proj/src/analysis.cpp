#include "geoprog/analysis.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

#include "geoprog/tools.hpp"

namespace geoprog {

using nlohmann::json;

const char* dimension_name(Dimension d) {
  switch (d) {
    case Dimension::Existence: return "Existence";
    case Dimension::Quantity: return "Quantity";
    case Dimension::Coverage: return "Coverage";
    case Dimension::Comparison: return "Comparison";
    case Dimension::Category: return "Category";
    case Dimension::Relation: return "Relation";
    case Dimension::Scene: return "Scene";
    case Dimension::Direction: return "Direction";
    case Dimension::Overlap: return "Overlap";
  }
  return "?";
}

std::vector<Dimension> DimensionSet::items() const {
  std::vector<Dimension> out;
  for (size_t i = 0; i < kDimensionCount; ++i)
    if (bits_ & (1u << i)) out.push_back(Dimension(i));
  return out;
}

std::string DimensionSet::to_string() const {
  std::string out = "{";
  bool first = true;
  for (Dimension d : items()) {
    if (!first) out += ", ";
    out += dimension_name(d);
    first = false;
  }
  return out + "}";
}

Vocab Vocab::builtin() {
  Vocab v;
  v.object_classes = {
      "vehicle",      "small vehicle", "large vehicle", "ship",        "cargo ship",
      "fishing ship", "building",      "tree",          "airplane",    "helicopter",
      "bridge",       "storage tank",  "baseball diamond", "tennis court",
      "basketball court", "ground track field", "harbor", "swimming pool", "airport",
  };
  v.scene_classes = {
      "road",     "water", "parking_lot",  "vegetation",   "forest",    "grass",
      "cropland", "land",  "bareland",     "intersection", "roundabout",
  };
  v.direction_tokens = {
      "N",  "NE", "E",  "SE", "S",  "SW", "W",  "NW", "TL", "TR",
      "BL", "BR", "north", "south", "east", "west", "northeast", "northwest",
      "southeast", "southwest",
  };
  return v;
}

namespace {

std::vector<std::string> read_terms(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

}  // namespace

Vocab Vocab::load_dir(const std::filesystem::path& dir) {
  Vocab v = builtin();
  if (auto t = read_terms(dir / "object_classes.txt"); !t.empty()) v.object_classes = t;
  if (auto t = read_terms(dir / "scene_classes.txt"); !t.empty()) v.scene_classes = t;
  if (auto t = read_terms(dir / "direction_tokens.txt"); !t.empty()) v.direction_tokens = t;
  return v;
}

// ---------------------------------------------------------------------------
// Question rules

namespace {

const std::regex& rx(const char* pattern) {
  static std::map<std::string, std::regex> cache;
  auto it = cache.find(pattern);
  if (it == cache.end())
    it = cache.emplace(pattern, std::regex(pattern, std::regex::ECMAScript)).first;
  return it->second;
}

bool matches(const std::string& text, const char* pattern) {
  return std::regex_search(text, rx(pattern));
}

// Word-boundary search for a (possibly multiword) term in lowercased text,
// tolerating a plural 's' on the final word.
bool term_in_text(const std::string& text, const std::string& term) {
  const std::string lowered = normalize_phrase(term);
  size_t at = 0;
  while ((at = text.find(lowered, at)) != std::string::npos) {
    const bool left_ok = at == 0 || !ascii::is_alnum(text[at - 1]);
    size_t end = at + lowered.size();
    if (end < text.size() && text[end] == 's') ++end;  // plural fold
    const bool right_ok = end >= text.size() || !ascii::is_alnum(text[end]);
    if (left_ok && right_ok) return true;
    ++at;
  }
  return false;
}

}  // namespace

DimensionSet classify_question(std::string_view question, const Vocab& vocab) {
  std::string q = normalize_phrase(question);
  DimensionSet out;

  const bool existence_trigger =
      matches(q, "\\bare there\\b|\\bis there\\b|\\bany\\b");
  if (existence_trigger) out.add(Dimension::Existence);

  const bool comparative_count = matches(q, "\\b(more|fewer)\\b[^.?]*\\bthan\\b");
  if (matches(q, "\\bhow many\\b|\\bnumber of\\b") || comparative_count)
    out.add(Dimension::Quantity);

  if (matches(q, "\\barea of\\b|\\bratio of\\b|\\bhow large\\b"))
    out.add(Dimension::Coverage);

  if (matches(q, "\\blarger\\b|\\bsmaller\\b|\\bmost\\b|\\bleast\\b") ||
      matches(q, "\\b(more|less|fewer)\\b[^.?]*\\bthan\\b") ||
      matches(q, "\\b[a-z]+ or [a-z]+\\b"))
    out.add(Dimension::Comparison);

  // Type-of patterns, plus multiword object-class terms; bare single-word
  // class mentions are too common in unrelated questions to be a signal.
  bool category = matches(q, "\\bwhat type of\\b|\\bwhat kind of object\\b");
  if (!category)
    for (const std::string& term : vocab.object_classes)
      if (term.find(' ') != std::string::npos && term_in_text(q, term)) {
        category = true;
        break;
      }
  if (category) out.add(Dimension::Category);

  if (matches(q, "\\bnear\\b|\\bnearest\\b|\\bnext to\\b|\\bbetween\\b|\\badjacent\\b|"
                 "\\bclosest\\b"))
    out.add(Dimension::Relation);

  if (matches(q, "\\bland use\\b|\\brural\\b|\\burban\\b|\\bwhat kind of scene\\b|"
                 "\\bwhat type of scene\\b"))
    out.add(Dimension::Scene);

  if (matches(q, "\\bnorth\\b|\\bsouth\\b|\\beast\\b|\\bwest\\b|\\btop of\\b|\\bwhere is\\b"))
    out.add(Dimension::Direction);

  if (matches(q, "\\bboth\\b|\\bintersect(ion|ions|s|ing)?\\b|\\boverlap(s|ping)?\\b"))
    out.add(Dimension::Overlap);

  // Override rules; each only removes Existence, so their order is immaterial.
  if (out.has(Dimension::Comparison)) out.remove(Dimension::Existence);
  if (out.has(Dimension::Scene) && !existence_trigger) out.remove(Dimension::Existence);
  return out;
}

// ---------------------------------------------------------------------------
// Program rules (exact AST walk)

namespace {

struct ProgramFacts {
  std::set<std::string> heads;
  std::vector<std::string> string_literals;
  size_t centroid_calls = 0;
};

void walk(const AstNode& n, ProgramFacts& facts) {
  switch (n.kind) {
    case AstNode::Kind::StrLit:
      facts.string_literals.push_back(n.name);
      return;
    case AstNode::Kind::Call:
      facts.heads.insert(n.name);
      if (n.name == "centroid") ++facts.centroid_calls;
      break;
    default:
      break;
  }
  for (const auto& [_, expr] : n.bindings) walk(expr, facts);
  for (const AstNode& c : n.children) walk(c, facts);
}

bool any_head(const ProgramFacts& f, std::initializer_list<const char*> names) {
  for (const char* n : names)
    if (f.heads.count(n)) return true;
  return false;
}

}  // namespace

DimensionSet classify_program(const ProgramSource& program, const Vocab& vocab) {
  ProgramFacts facts;
  walk(program.ast(), facts);
  DimensionSet out;

  if (any_head(facts, {"exists"})) out.add(Dimension::Existence);
  if (any_head(facts, {"count", "len"})) out.add(Dimension::Quantity);
  if (any_head(facts, {"area"})) out.add(Dimension::Coverage);
  if (any_head(facts, {"argmin", "argmax", "largest", "smallest", "extreme", "filter_by",
                       "<", "<=", ">", ">="}))
    out.add(Dimension::Comparison);
  if (any_head(facts, {"distance", "nearest", "adjacent", "mean_position"}) ||
      facts.centroid_calls >= 2)
    out.add(Dimension::Relation);
  if (any_head(facts, {"overlaps", "contains"})) out.add(Dimension::Overlap);
  if (any_head(facts, {"quadrant", "relpos"})) out.add(Dimension::Direction);

  for (const std::string& lit : facts.string_literals) {
    const std::string norm = normalize_phrase(lit);
    for (const std::string& term : vocab.object_classes)
      if (norm == normalize_phrase(term)) out.add(Dimension::Category);
    for (const std::string& term : vocab.scene_classes)
      if (norm == normalize_phrase(term)) out.add(Dimension::Scene);
    for (const std::string& token : vocab.direction_tokens)
      if (lit == token) out.add(Dimension::Direction);
  }
  return out;
}

std::set<std::string> detect_primitives(const ProgramSource& program) {
  ProgramFacts facts;
  walk(program.ast(), facts);
  std::set<std::string> out;
  for (const std::string& head : facts.heads) {
    const HeadInfo* info = find_head(head);
    if (info && info->canonical_primitive) out.insert(info->canonical_primitive);
  }
  return out;
}

bool uses_segment_tool(const ProgramSource& program) {
  ProgramFacts facts;
  walk(program.ast(), facts);
  return facts.heads.count("segment") > 0;
}

// ---------------------------------------------------------------------------
// Corpus statistics

UsageReport corpus_stats(std::span<const Problem> problems, const Vocab& vocab) {
  UsageReport report;
  report.corpus_size = problems.size();
  for (const HeadInfo& h : head_registry())
    if (h.canonical_primitive) report.primitive_counts[h.canonical_primitive] = 0;

  for (const Problem& p : problems) {
    for (const std::string& prim : detect_primitives(p.program))
      report.primitive_counts[prim] += 1;
    if (uses_segment_tool(p.program)) report.segment_count += 1;

    DimensionSet dims = classify_question(p.question, vocab);
    const DimensionSet prog_dims = classify_program(p.program, vocab);
    for (Dimension d : prog_dims.items()) dims.add(d);

    const auto items = dims.items();
    for (Dimension d : items) report.node_weights[size_t(d)] += 1;
    for (size_t i = 0; i < items.size(); ++i)
      for (size_t j = i + 1; j < items.size(); ++j) {
        report.edges[size_t(items[i])][size_t(items[j])] += 1;
        report.edges[size_t(items[j])][size_t(items[i])] += 1;
      }
  }
  return report;
}

json UsageReport::to_json() const {
  json prims = json::object();
  for (const auto& [name, count] : primitive_counts) {
    prims[name] = {{"count", count},
                   {"percent", corpus_size ? 100.0 * double(count) / double(corpus_size) : 0.0}};
  }
  json nodes = json::object();
  for (size_t i = 0; i < kDimensionCount; ++i)
    nodes[dimension_name(Dimension(i))] = node_weights[i];
  json edge_list = json::array();
  for (size_t i = 0; i < kDimensionCount; ++i)
    for (size_t j = i + 1; j < kDimensionCount; ++j)
      if (edges[i][j])
        edge_list.push_back({{"a", dimension_name(Dimension(i))},
                             {"b", dimension_name(Dimension(j))},
                             {"weight", edges[i][j]}});
  return json{{"corpus_size", corpus_size},
              {"primitives", prims},
              {"segment_tool",
               {{"count", segment_count},
                {"percent",
                 corpus_size ? 100.0 * double(segment_count) / double(corpus_size) : 0.0}}},
              {"dimension_nodes", nodes},
              {"dimension_edges", edge_list}};
}

namespace {

const char* primitive_group(const std::string& name) {
  static const std::set<std::string> geometric = {"area", "bbox", "centroid", "orientation"};
  static const std::set<std::string> topological = {
      "adjacent", "contains", "distance", "grid", "in_cell",
      "nearest",  "overlaps", "quadrant", "relpos"};
  if (geometric.count(name)) return "geometric";
  if (topological.count(name)) return "topological";
  return "aggregation";
}

}  // namespace

std::string UsageReport::primitives_csv() const {
  std::ostringstream os;
  os << "group,primitive,count,percent\n";
  for (const auto& [name, count] : primitive_counts) {
    const double pct = corpus_size ? 100.0 * double(count) / double(corpus_size) : 0.0;
    os << primitive_group(name) << ",\"" << name << "\"," << count << "," << pct << "\n";
  }
  os << "tool,segment," << segment_count << ","
     << (corpus_size ? 100.0 * double(segment_count) / double(corpus_size) : 0.0) << "\n";
  return os.str();
}

std::string UsageReport::dimensions_csv() const {
  std::ostringstream os;
  os << "dimension,count\n";
  for (size_t i = 0; i < kDimensionCount; ++i)
    os << dimension_name(Dimension(i)) << "," << node_weights[i] << "\n";
  return os.str();
}

std::string UsageReport::cooccurrence_csv() const {
  std::ostringstream os;
  os << "dimension";
  for (size_t j = 0; j < kDimensionCount; ++j) os << "," << dimension_name(Dimension(j));
  os << "\n";
  for (size_t i = 0; i < kDimensionCount; ++i) {
    os << dimension_name(Dimension(i));
    for (size_t j = 0; j < kDimensionCount; ++j) os << "," << edges[i][j];
    os << "\n";
  }
  return os.str();
}

}  // namespace geoprog
