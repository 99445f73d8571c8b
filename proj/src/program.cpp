#include "geoprog/program.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <unordered_map>

namespace geoprog {

using nlohmann::json;

const char* CompileError::code_name() const {
  switch (code) {
    case Code::ParseError: return "ParseError";
    case Code::UnknownCallable: return "UnknownCallable";
    case Code::ArityError: return "ArityError";
    case Code::UnboundVariable: return "UnboundVariable";
  }
  return "?";
}

const char* ExecFailure::kind_name() const {
  switch (kind) {
    case Kind::ParseError: return "ParseError";
    case Kind::ValidationError: return "ValidationError";
    case Kind::RuntimeError: return "RuntimeError";
    case Kind::StepBudgetExceeded: return "StepBudgetExceeded";
    case Kind::MaskSetOverflow: return "MaskSetOverflow";
    case Kind::NonDeterministic: return "NonDeterministic";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Head registry

namespace {

constexpr HeadInfo kHeads[] = {
    // tool
    {"segment", 2, 2, nullptr},
    // geometric
    {"area", 1, 1, "area"},
    {"bbox", 1, 1, "bbox"},
    {"centroid", 1, 1, "centroid"},
    {"orientation", 1, 1, "orientation"},
    // topological
    {"adjacent", 2, 2, "adjacent"},
    {"contains", 2, 2, "contains"},
    {"distance", 2, 2, "distance"},
    {"grid", 3, 3, "grid"},
    {"in_cell", 3, 3, "in_cell"},
    {"nearest", 2, 2, "nearest"},
    {"overlaps", 2, 2, "overlaps"},
    {"quadrant", 2, 2, "quadrant"},
    {"relpos", 2, 2, "relpos"},
    // aggregation
    {"argmin", 1, 1, "argmin/argmax"},
    {"argmax", 1, 1, "argmin/argmax"},
    {"components", 1, 1, "components"},
    {"count", 1, 1, "count"},
    {"exists", 1, 1, "exists"},
    {"extreme", 2, 2, "extreme"},
    {"filter_by", 4, 4, "filter_by"},
    {"largest", 1, 1, "largest/smallest"},
    {"smallest", 1, 1, "largest/smallest"},
    {"mean_position", 1, 1, "mean_position"},
    {"union", 1, 1, "union"},
    // glue
    {"+", 2, 2, nullptr},
    {"-", 2, 2, nullptr},
    {"*", 2, 2, nullptr},
    {"/", 2, 2, nullptr},
    {"<", 2, 2, nullptr},
    {"<=", 2, 2, nullptr},
    {">", 2, 2, nullptr},
    {">=", 2, 2, nullptr},
    {"=", 2, 2, nullptr},
    {"and", 2, 2, nullptr},
    {"or", 2, 2, nullptr},
    {"not", 1, 1, nullptr},
    {"nth", 2, 2, nullptr},
    {"len", 1, 1, nullptr},
    {"pair", 2, 2, nullptr},
};

}  // namespace

std::span<const HeadInfo> head_registry() { return kHeads; }

const HeadInfo* find_head(std::string_view name) {
  for (const HeadInfo& h : kHeads)
    if (name == h.name) return &h;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

constexpr int kMaxNesting = 512;

struct Token {
  enum class Type { LParen, RParen, Atom, Str, End };
  Type type;
  std::string text;
  int pos;
};

struct Lexer {
  std::string_view src;
  size_t i = 0;

  CompileError err(const std::string& msg, size_t at) const {
    return CompileError{CompileError::Code::ParseError, msg, int(at)};
  }

  std::variant<Token, CompileError> next() {
    while (i < src.size() && ascii::is_space(src[i])) ++i;
    if (i >= src.size()) return Token{Token::Type::End, "", int(i)};
    const size_t start = i;
    const char c = src[i];
    if (c == '(') {
      ++i;
      return Token{Token::Type::LParen, "(", int(start)};
    }
    if (c == ')') {
      ++i;
      return Token{Token::Type::RParen, ")", int(start)};
    }
    if (c == '"') {
      ++i;
      std::string out;
      while (i < src.size() && src[i] != '"') {
        char ch = src[i];
        if (ch == '\\') {
          ++i;
          if (i >= src.size()) return err("unterminated escape in string", start);
          switch (src[i]) {
            case '"': ch = '"'; break;
            case '\\': ch = '\\'; break;
            case 'n': ch = '\n'; break;
            case 't': ch = '\t'; break;
            default: return err("unknown escape in string", i);
          }
        }
        out.push_back(ch);
        ++i;
      }
      if (i >= src.size()) return err("unterminated string literal", start);
      ++i;  // closing quote
      return Token{Token::Type::Str, std::move(out), int(start)};
    }
    std::string out;
    while (i < src.size()) {
      const char ch = src[i];
      if (ch == '(' || ch == ')' || ch == '"' || ascii::is_space(ch)) break;
      out.push_back(ch);
      ++i;
    }
    return Token{Token::Type::Atom, std::move(out), int(start)};
  }
};

bool looks_like_int(const std::string& s) {
  size_t k = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  if (k >= s.size()) return false;
  for (; k < s.size(); ++k)
    if (!ascii::is_digit(s[k])) return false;
  return true;
}

bool looks_like_float(const std::string& s) {
  size_t k = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  if (k >= s.size()) return false;
  bool digit = false, dot = false, exp = false;
  for (; k < s.size(); ++k) {
    const char c = s[k];
    if (ascii::is_digit(c)) {
      digit = true;
    } else if (c == '.' && !dot && !exp) {
      dot = true;
    } else if ((c == 'e' || c == 'E') && digit && !exp) {
      exp = true;
      if (k + 1 < s.size() && (s[k + 1] == '+' || s[k + 1] == '-')) ++k;
    } else {
      return false;
    }
  }
  return digit && (dot || exp);
}

bool valid_symbol(const std::string& s) {
  for (char c : s) {
    if (!(ascii::is_alnum(c) || c == '_' || c == '-' || c == '+' || c == '*' ||
          c == '/' || c == '<' || c == '>' || c == '=' || c == '?' || c == '.'))
      return false;
  }
  return !s.empty();
}

struct Parser {
  Lexer lex;
  std::optional<Token> lookahead;
  std::optional<CompileError> error;

  Token peek() {
    if (!lookahead) {
      auto t = lex.next();
      if (auto* e = std::get_if<CompileError>(&t)) {
        error = *e;
        return Token{Token::Type::End, "", e->pos};
      }
      lookahead = std::get<Token>(t);
    }
    return *lookahead;
  }
  Token take() {
    Token t = peek();
    lookahead.reset();
    return t;
  }

  std::optional<AstNode> parse_expr(int depth) {
    if (error) return std::nullopt;
    if (depth > kMaxNesting) {
      error = CompileError{CompileError::Code::ParseError, "nesting too deep", peek().pos};
      return std::nullopt;
    }
    Token t = take();
    if (error) return std::nullopt;
    switch (t.type) {
      case Token::Type::End:
        error = CompileError{CompileError::Code::ParseError, "unexpected end of input", t.pos};
        return std::nullopt;
      case Token::Type::RParen:
        error = CompileError{CompileError::Code::ParseError, "unexpected ')'", t.pos};
        return std::nullopt;
      case Token::Type::Str: {
        AstNode n;
        n.kind = AstNode::Kind::StrLit;
        n.pos = t.pos;
        n.name = std::move(t.text);
        return n;
      }
      case Token::Type::Atom:
        return parse_atom(std::move(t));
      case Token::Type::LParen:
        return parse_form(t.pos, depth);
    }
    return std::nullopt;
  }

  std::optional<AstNode> parse_atom(Token t) {
    AstNode n;
    n.pos = t.pos;
    if (t.text == "true" || t.text == "false") {
      n.kind = AstNode::Kind::BoolLit;
      n.bool_val = t.text == "true";
      return n;
    }
    if (looks_like_int(t.text)) {
      int64_t v = 0;
      const char* b = t.text.data();
      auto [p, ec] = std::from_chars(b, b + t.text.size(), v);
      if (ec != std::errc{} || p != b + t.text.size()) {
        error = CompileError{CompileError::Code::ParseError,
                             "integer literal out of range: " + t.text, t.pos};
        return std::nullopt;
      }
      n.kind = AstNode::Kind::IntLit;
      n.int_val = v;
      return n;
    }
    if (looks_like_float(t.text)) {
      double v = 0;
      const char* b = t.text.data();
      auto [p, ec] = std::from_chars(b, b + t.text.size(), v);
      if (ec != std::errc{} || p != b + t.text.size() || !std::isfinite(v)) {
        error = CompileError{CompileError::Code::ParseError,
                             "bad float literal: " + t.text, t.pos};
        return std::nullopt;
      }
      n.kind = AstNode::Kind::FloatLit;
      n.float_val = v;
      return n;
    }
    if (!valid_symbol(t.text)) {
      error = CompileError{CompileError::Code::ParseError, "bad token: " + t.text, t.pos};
      return std::nullopt;
    }
    n.kind = AstNode::Kind::Var;
    n.name = std::move(t.text);
    return n;
  }

  std::optional<AstNode> parse_form(int pos, int depth) {
    Token head = peek();
    if (error) return std::nullopt;
    if (head.type != Token::Type::Atom) {
      error = CompileError{CompileError::Code::ParseError,
                           "expected a form head after '('", head.pos};
      return std::nullopt;
    }
    take();
    if (head.text == "let") return parse_let(pos, depth);
    AstNode n;
    n.pos = pos;
    n.name = head.text;
    if (head.text == "if") {
      n.kind = AstNode::Kind::If;
    } else if (head.text == "list") {
      n.kind = AstNode::Kind::ListCtor;
    } else {
      n.kind = AstNode::Kind::Call;
    }
    while (true) {
      Token t = peek();
      if (error) return std::nullopt;
      if (t.type == Token::Type::RParen) {
        take();
        break;
      }
      if (t.type == Token::Type::End) {
        error = CompileError{CompileError::Code::ParseError, "missing ')'", t.pos};
        return std::nullopt;
      }
      auto child = parse_expr(depth + 1);
      if (!child) return std::nullopt;
      n.children.push_back(std::move(*child));
    }
    if (n.kind == AstNode::Kind::If && n.children.size() != 3) {
      error = CompileError{CompileError::Code::ParseError, "if expects exactly 3 forms", pos};
      return std::nullopt;
    }
    return n;
  }

  std::optional<AstNode> parse_let(int pos, int depth) {
    AstNode n;
    n.kind = AstNode::Kind::Let;
    n.pos = pos;
    Token t = take();
    if (error) return std::nullopt;
    if (t.type != Token::Type::LParen) {
      error = CompileError{CompileError::Code::ParseError,
                           "let expects a binding list", t.pos};
      return std::nullopt;
    }
    while (true) {
      t = peek();
      if (error) return std::nullopt;
      if (t.type == Token::Type::RParen) {
        take();
        break;
      }
      if (t.type != Token::Type::LParen) {
        error = CompileError{CompileError::Code::ParseError,
                             "let binding expects (name expr)", t.pos};
        return std::nullopt;
      }
      take();
      Token name = take();
      if (error) return std::nullopt;
      if (name.type != Token::Type::Atom || !valid_symbol(name.text) ||
          looks_like_int(name.text) || looks_like_float(name.text) ||
          name.text == "true" || name.text == "false") {
        error = CompileError{CompileError::Code::ParseError,
                             "bad let binding name", name.pos};
        return std::nullopt;
      }
      auto expr = parse_expr(depth + 1);
      if (!expr) return std::nullopt;
      Token close = take();
      if (error) return std::nullopt;
      if (close.type != Token::Type::RParen) {
        error = CompileError{CompileError::Code::ParseError,
                             "let binding expects exactly one expr", close.pos};
        return std::nullopt;
      }
      n.bindings.emplace_back(std::move(name.text), std::move(*expr));
    }
    if (n.bindings.empty()) {
      error = CompileError{CompileError::Code::ParseError,
                           "let expects at least one binding", pos};
      return std::nullopt;
    }
    auto body = parse_expr(depth + 1);
    if (!body) return std::nullopt;
    Token close = take();
    if (error) return std::nullopt;
    if (close.type != Token::Type::RParen) {
      error = CompileError{CompileError::Code::ParseError,
                           "let expects exactly one body expr", close.pos};
      return std::nullopt;
    }
    n.children.push_back(std::move(*body));
    return n;
  }
};

}  // namespace

std::variant<AstNode, CompileError> parse(std::string_view text) {
  Parser parser{Lexer{text}, std::nullopt, std::nullopt};
  auto expr = parser.parse_expr(0);
  if (!expr) return *parser.error;
  Token tail = parser.peek();
  if (parser.error) return *parser.error;
  if (tail.type != Token::Type::End)
    return CompileError{CompileError::Code::ParseError, "trailing content after program",
                        tail.pos};
  return std::move(*expr);
}

// ---------------------------------------------------------------------------
// Validator

namespace {

std::optional<CompileError> validate_node(const AstNode& n,
                                          std::vector<std::string>& scope) {
  using K = AstNode::Kind;
  switch (n.kind) {
    case K::IntLit:
    case K::FloatLit:
    case K::BoolLit:
    case K::StrLit:
      return std::nullopt;
    case K::ListCtor: {
      for (const AstNode& c : n.children)
        if (auto e = validate_node(c, scope)) return e;
      return std::nullopt;
    }
    case K::Var: {
      for (auto it = scope.rbegin(); it != scope.rend(); ++it)
        if (*it == n.name) return std::nullopt;
      return CompileError{CompileError::Code::UnboundVariable,
                          "unbound variable: " + n.name, n.pos};
    }
    case K::Let: {
      const size_t base = scope.size();
      for (const auto& [name, expr] : n.bindings) {
        if (auto e = validate_node(expr, scope)) {
          scope.resize(base);
          return e;
        }
        scope.push_back(name);  // sequential binding: later inits see earlier names
      }
      auto e = validate_node(n.children[0], scope);
      scope.resize(base);
      return e;
    }
    case K::If: {
      for (const AstNode& c : n.children)
        if (auto e = validate_node(c, scope)) return e;
      return std::nullopt;
    }
    case K::Call: {
      const HeadInfo* head = find_head(n.name);
      if (!head)
        return CompileError{CompileError::Code::UnknownCallable,
                            "unknown callable: " + n.name, n.pos};
      const int argc = int(n.children.size());
      if (argc < head->min_arity || (head->max_arity >= 0 && argc > head->max_arity))
        return CompileError{CompileError::Code::ArityError,
                            n.name + " expects " + std::to_string(head->min_arity) +
                                " argument(s), got " + std::to_string(argc),
                            n.pos};
      for (const AstNode& c : n.children)
        if (auto e = validate_node(c, scope)) return e;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<CompileError> validate(const AstNode& root) {
  std::vector<std::string> scope = {"image", "arg"};
  return validate_node(root, scope);
}

std::variant<ProgramSource, CompileError> ProgramSource::compile(std::string text) {
  auto parsed = parse(text);
  if (auto* e = std::get_if<CompileError>(&parsed)) return *e;
  auto ast = std::make_shared<AstNode>(std::move(std::get<AstNode>(parsed)));
  if (auto e = validate(*ast)) return *e;
  return ProgramSource(std::move(text), std::move(ast));
}

// ---------------------------------------------------------------------------
// Evaluator

namespace {

struct EvalAbort {
  ExecFailure failure;
};

[[noreturn]] void runtime_error(prim::ErrKind kind, const std::string& detail) {
  throw EvalAbort{ExecFailure{ExecFailure::Kind::RuntimeError, kind, detail}};
}

struct EvalCtx {
  const ImageRef& image;
  const SegmenterProvider& seg;
  const ExecLimits& limits;
  int64_t steps = 0;
  std::vector<std::pair<std::string, Value>> scope;

  void tick() {
    if (++steps > limits.step_budget)
      throw EvalAbort{ExecFailure{ExecFailure::Kind::StepBudgetExceeded, std::nullopt,
                                  "step budget exceeded"}};
  }

  const Value* lookup(const std::string& name) const {
    for (auto it = scope.rbegin(); it != scope.rend(); ++it)
      if (it->first == name) return &it->second;
    return nullptr;
  }
};

const Mask& expect_mask(const Value& v, const char* head) {
  if (v.kind() != ValueKind::Mask)
    runtime_error(prim::ErrKind::TypeError,
                  std::string(head) + ": expected mask, got " + kind_name(v.kind()));
  return v.as_mask();
}

const MaskSet& expect_maskset(const Value& v, const char* head) {
  if (v.kind() != ValueKind::MaskSet)
    runtime_error(prim::ErrKind::TypeError,
                  std::string(head) + ": expected maskset, got " + kind_name(v.kind()));
  return v.as_mask_set();
}

const Point& expect_point(const Value& v, const char* head) {
  if (v.kind() != ValueKind::Point)
    runtime_error(prim::ErrKind::TypeError,
                  std::string(head) + ": expected point, got " + kind_name(v.kind()));
  return v.as_point();
}

const ImageRef& expect_image(const Value& v, const char* head) {
  if (v.kind() != ValueKind::Image)
    runtime_error(prim::ErrKind::TypeError,
                  std::string(head) + ": expected image, got " + kind_name(v.kind()));
  return v.as_image();
}

const std::string& expect_str(const Value& v, const char* head) {
  if (v.kind() != ValueKind::Str)
    runtime_error(prim::ErrKind::TypeError,
                  std::string(head) + ": expected string, got " + kind_name(v.kind()));
  return v.as_str();
}

bool expect_bool(const Value& v, const char* head) {
  if (v.kind() != ValueKind::Bool)
    runtime_error(prim::ErrKind::TypeError,
                  std::string(head) + ": expected bool, got " + kind_name(v.kind()));
  return v.as_bool();
}

double expect_numeric(const Value& v, const char* head) {
  if (!v.is_numeric())
    runtime_error(prim::ErrKind::TypeError,
                  std::string(head) + ": expected number, got " + kind_name(v.kind()));
  return v.numeric();
}

int64_t expect_int(const Value& v, const char* head) {
  if (v.kind() != ValueKind::Int)
    runtime_error(prim::ErrKind::TypeError,
                  std::string(head) + ": expected int, got " + kind_name(v.kind()));
  return v.as_int();
}

Value checked_arith(char op, const Value& a, const Value& b) {
  const char head[2] = {op, 0};
  if (a.kind() == ValueKind::Int && b.kind() == ValueKind::Int && op != '/') {
    const int64_t x = a.as_int(), y = b.as_int();
    int64_t r = 0;
    bool overflow = false;
    switch (op) {
      case '+': overflow = __builtin_add_overflow(x, y, &r); break;
      case '-': overflow = __builtin_sub_overflow(x, y, &r); break;
      case '*': overflow = __builtin_mul_overflow(x, y, &r); break;
    }
    if (overflow) runtime_error(prim::ErrKind::NonFinite, "integer overflow");
    return Value::integer(r);
  }
  const double x = expect_numeric(a, head);
  const double y = expect_numeric(b, head);
  double r = 0;
  switch (op) {
    case '+': r = x + y; break;
    case '-': r = x - y; break;
    case '*': r = x * y; break;
    case '/':
      if (y == 0.0) runtime_error(prim::ErrKind::DivByZero, "division by zero");
      r = x / y;
      break;
  }
  if (!std::isfinite(r)) runtime_error(prim::ErrKind::NonFinite, "non-finite result");
  return Value::real(r);
}

Value eval_node(const AstNode& n, EvalCtx& ctx);

Value eval_call(const AstNode& n, EvalCtx& ctx) {
  std::vector<Value> args;
  args.reserve(n.children.size());
  for (const AstNode& c : n.children) args.push_back(eval_node(c, ctx));
  const std::string& h = n.name;

  try {
    if (h == "segment") {
      const ImageRef& img = expect_image(args[0], "segment");
      const std::string& phrase = expect_str(args[1], "segment");
      MaskSet out = ctx.seg.segment(img, phrase);
      if (int64_t(out.elems.size()) > ctx.limits.max_maskset)
        throw EvalAbort{ExecFailure{ExecFailure::Kind::MaskSetOverflow, std::nullopt,
                                    "segment returned too many instances"}};
      return Value::mask_set(std::move(out));
    }
    if (h == "area") return Value::integer(prim::area(expect_mask(args[0], "area")));
    if (h == "bbox") return Value::box(prim::bbox(expect_mask(args[0], "bbox")));
    if (h == "centroid")
      return Value::point(prim::centroid(expect_mask(args[0], "centroid")));
    if (h == "orientation")
      return Value::real(prim::orientation_deg(expect_mask(args[0], "orientation")));
    if (h == "overlaps")
      return Value::boolean(
          prim::overlaps(expect_mask(args[0], "overlaps"), expect_mask(args[1], "overlaps")));
    if (h == "contains")
      return Value::boolean(
          prim::contains(expect_mask(args[0], "contains"), expect_mask(args[1], "contains")));
    if (h == "adjacent")
      return Value::boolean(
          prim::adjacent(expect_mask(args[0], "adjacent"), expect_mask(args[1], "adjacent")));
    if (h == "distance")
      return Value::real(
          prim::distance(expect_mask(args[0], "distance"), expect_mask(args[1], "distance")));
    if (h == "quadrant")
      return Value::str(prim::name(
          prim::quadrant(expect_point(args[0], "quadrant"), expect_image(args[1], "quadrant"))));
    if (h == "relpos")
      return Value::str(prim::name(
          prim::relpos(expect_mask(args[0], "relpos"), expect_mask(args[1], "relpos"))));
    if (h == "grid")
      return Value::integer(prim::grid_cell(expect_point(args[0], "grid"),
                                            expect_image(args[1], "grid"),
                                            expect_int(args[2], "grid")));
    if (h == "in_cell")
      return Value::boolean(prim::in_cell(expect_mask(args[0], "in_cell"),
                                          expect_int(args[1], "in_cell"),
                                          expect_int(args[2], "in_cell")));
    if (h == "nearest")
      return Value::integer(int64_t(
          prim::nearest(expect_maskset(args[0], "nearest"), expect_mask(args[1], "nearest"))));
    if (h == "components") {
      MaskSet out = prim::components(expect_mask(args[0], "components"));
      if (int64_t(out.elems.size()) > ctx.limits.max_maskset)
        throw EvalAbort{ExecFailure{ExecFailure::Kind::MaskSetOverflow, std::nullopt,
                                    "components produced too many masks"}};
      return Value::mask_set(std::move(out));
    }
    if (h == "count") return Value::integer(prim::count(expect_maskset(args[0], "count")));
    if (h == "exists") {
      if (args[0].kind() == ValueKind::Mask) return Value::boolean(prim::exists(args[0].as_mask()));
      if (args[0].kind() == ValueKind::MaskSet)
        return Value::boolean(prim::exists(args[0].as_mask_set()));
      runtime_error(prim::ErrKind::TypeError,
                    std::string("exists: expected mask or maskset, got ") +
                        kind_name(args[0].kind()));
    }
    if (h == "union")
      return Value::mask(prim::union_of(expect_maskset(args[0], "union"), ctx.image.width,
                                        ctx.image.height));
    if (h == "argmin" || h == "argmax") {
      std::vector<double> vals;
      if (args[0].kind() != ValueKind::List)
        runtime_error(prim::ErrKind::TypeError,
                      h + ": expected list, got " + std::string(kind_name(args[0].kind())));
      for (const Value& v : args[0].as_list()) vals.push_back(expect_numeric(v, h.c_str()));
      return Value::integer(int64_t(prim::arg_extremum(
          vals, h == "argmin" ? prim::Extremum::Min : prim::Extremum::Max)));
    }
    if (h == "largest" || h == "smallest")
      return Value::integer(int64_t(prim::size_extremum(
          expect_maskset(args[0], h.c_str()),
          h == "largest" ? prim::SizeMode::Largest : prim::SizeMode::Smallest)));
    if (h == "extreme") {
      const std::string& d = expect_str(args[1], "extreme");
      prim::Cardinal dir;
      if (d == "N") dir = prim::Cardinal::N;
      else if (d == "S") dir = prim::Cardinal::S;
      else if (d == "E") dir = prim::Cardinal::E;
      else if (d == "W") dir = prim::Cardinal::W;
      else runtime_error(prim::ErrKind::TypeError, "extreme: direction must be N|S|E|W");
      return Value::integer(int64_t(prim::extreme(expect_maskset(args[0], "extreme"), dir)));
    }
    if (h == "filter_by") {
      const std::string& key = expect_str(args[1], "filter_by");
      const std::string& cmp = expect_str(args[2], "filter_by");
      prim::FilterKey fk;
      if (key == "area") fk = prim::FilterKey::Area;
      else if (key == "cx") fk = prim::FilterKey::Cx;
      else if (key == "cy") fk = prim::FilterKey::Cy;
      else runtime_error(prim::ErrKind::TypeError, "filter_by: key must be area|cx|cy");
      prim::CmpOp op;
      if (cmp == "<") op = prim::CmpOp::Lt;
      else if (cmp == "<=") op = prim::CmpOp::Le;
      else if (cmp == ">") op = prim::CmpOp::Gt;
      else if (cmp == ">=") op = prim::CmpOp::Ge;
      else if (cmp == "=") op = prim::CmpOp::Eq;
      else runtime_error(prim::ErrKind::TypeError, "filter_by: cmp must be <|<=|>|>=|=");
      return Value::mask_set(prim::filter_by(expect_maskset(args[0], "filter_by"), fk, op,
                                             expect_numeric(args[3], "filter_by")));
    }
    if (h == "mean_position")
      return Value::point(prim::mean_position(expect_maskset(args[0], "mean_position")));

    if (h == "+" || h == "-" || h == "*" || h == "/")
      return checked_arith(h[0], args[0], args[1]);
    if (h == "<" || h == "<=" || h == ">" || h == ">=") {
      const double x = expect_numeric(args[0], h.c_str());
      const double y = expect_numeric(args[1], h.c_str());
      bool r = false;
      if (h == "<") r = x < y;
      else if (h == "<=") r = x <= y;
      else if (h == ">") r = x > y;
      else r = x >= y;
      return Value::boolean(r);
    }
    if (h == "=") return Value::boolean(value_equal(args[0], args[1]));
    if (h == "and") return Value::boolean(expect_bool(args[0], "and") && expect_bool(args[1], "and"));
    if (h == "or") return Value::boolean(expect_bool(args[0], "or") || expect_bool(args[1], "or"));
    if (h == "not") return Value::boolean(!expect_bool(args[0], "not"));
    if (h == "nth") {
      const int64_t i = expect_int(args[1], "nth");
      if (args[0].kind() == ValueKind::List) {
        const auto& l = args[0].as_list();
        if (i < 0 || size_t(i) >= l.size())
          runtime_error(prim::ErrKind::TypeError, "nth: index out of range");
        return l[size_t(i)];
      }
      if (args[0].kind() == ValueKind::MaskSet) {
        const auto& ms = args[0].as_mask_set();
        if (i < 0 || size_t(i) >= ms.elems.size())
          runtime_error(prim::ErrKind::TypeError, "nth: index out of range");
        return Value::mask(ms.elems[size_t(i)]);
      }
      runtime_error(prim::ErrKind::TypeError,
                    std::string("nth: expected list or maskset, got ") +
                        kind_name(args[0].kind()));
    }
    if (h == "len") {
      if (args[0].kind() == ValueKind::List)
        return Value::integer(int64_t(args[0].as_list().size()));
      if (args[0].kind() == ValueKind::MaskSet)
        return Value::integer(int64_t(args[0].as_mask_set().elems.size()));
      runtime_error(prim::ErrKind::TypeError,
                    std::string("len: expected list or maskset, got ") +
                        kind_name(args[0].kind()));
    }
    if (h == "pair") return Value::list({args[0], args[1]});
  } catch (const prim::PrimitiveError& e) {
    throw EvalAbort{ExecFailure{ExecFailure::Kind::RuntimeError, e.kind, e.what()}};
  } catch (const UnknownImageError& e) {
    throw EvalAbort{
        ExecFailure{ExecFailure::Kind::RuntimeError, prim::ErrKind::TypeError, e.what()}};
  }
  runtime_error(prim::ErrKind::TypeError, "unhandled head: " + h);
}

Value eval_node(const AstNode& n, EvalCtx& ctx) {
  ctx.tick();
  using K = AstNode::Kind;
  switch (n.kind) {
    case K::IntLit: return Value::integer(n.int_val);
    case K::FloatLit: return Value::real(n.float_val);
    case K::BoolLit: return Value::boolean(n.bool_val);
    case K::StrLit: return Value::str(n.name);
    case K::ListCtor: {
      ValueList out;
      out.reserve(n.children.size());
      for (const AstNode& c : n.children) out.push_back(eval_node(c, ctx));
      return Value::list(std::move(out));
    }
    case K::Var: {
      const Value* v = ctx.lookup(n.name);
      if (!v) runtime_error(prim::ErrKind::TypeError, "unbound variable: " + n.name);
      return *v;
    }
    case K::Let: {
      const size_t base = ctx.scope.size();
      for (const auto& [name, expr] : n.bindings)
        ctx.scope.emplace_back(name, eval_node(expr, ctx));
      Value out = eval_node(n.children[0], ctx);
      ctx.scope.resize(base);
      return out;
    }
    case K::If: {
      const bool cond = expect_bool(eval_node(n.children[0], ctx), "if");
      return eval_node(n.children[cond ? 1 : 2], ctx);
    }
    case K::Call:
      return eval_call(n, ctx);
  }
  runtime_error(prim::ErrKind::TypeError, "bad ast node");
}

}  // namespace

ExecOutcome evaluate(const ProgramSource& prog, const ImageRef& image, const Value& arg,
                     const SegmenterProvider& seg, const ExecLimits& limits) {
  EvalCtx ctx{image, seg, limits, 0, {}};
  ctx.scope.emplace_back("image", Value::image(image));
  ctx.scope.emplace_back("arg", arg);
  try {
    return ExecOutcome::success(eval_node(prog.ast(), ctx));
  } catch (const EvalAbort& abort) {
    return ExecOutcome::failed(abort.failure);
  }
}

std::variant<Value, Invalid> check_problem_validity(const ProgramSource& prog,
                                                    const ImageRef& image, const Value& arg,
                                                    const SegmenterProvider& seg,
                                                    const ExecLimits& limits) {
  const ExecOutcome first = evaluate(prog, image, arg, seg, limits);
  if (!first.ok()) {
    const ExecFailure& f = first.failure();
    std::string reason = std::string(f.kind_name());
    if (f.runtime_kind) reason += std::string(":") + prim::name(*f.runtime_kind);
    if (!f.detail.empty()) reason += ": " + f.detail;
    return Invalid{reason};
  }
  const ExecOutcome second = evaluate(prog, image, arg, seg, limits);
  if (!second.ok() || !exact_equal(first.value(), second.value()))
    return Invalid{"NonDeterministic: repeated execution disagreed"};
  if (!first.value().is_scorable())
    return Invalid{std::string("NotScorable: result is ") + kind_name(first.value().kind())};
  return first.value();
}

nlohmann::json ExecOutcome::to_json() const {
  if (ok()) return {{"status", "ok"}, {"value", value_to_json(value())}};
  const ExecFailure& f = failure();
  json j = {{"status", "failed"}, {"kind", f.kind_name()}};
  if (f.runtime_kind) j["runtime_kind"] = prim::name(*f.runtime_kind);
  if (!f.detail.empty()) j["detail"] = f.detail;
  return j;
}

}  // namespace geoprog
