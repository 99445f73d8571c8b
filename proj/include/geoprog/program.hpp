#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "geoprog/primitives.hpp"
#include "geoprog/tools.hpp"
#include "geoprog/value.hpp"

// The spatial-program language: s-expression surface syntax, a static
// validator that makes invalid effects unrepresentable (no randomness, I/O,
// or recursion exists in the grammar), and a deterministic evaluator over the
// primitives library plus the segmenter tool. Intermediate values stay inside
// the evaluator; callers only ever see the final value or a failure.
//
//   expr    := literal | var | (let ((name expr)+) expr)
//            | (if expr expr expr) | (head expr*)
//   literal := int | float | bool | string | (list expr*)
//   vars bound at top level: image, arg

namespace geoprog {

struct AstNode {
  enum class Kind { IntLit, FloatLit, BoolLit, StrLit, ListCtor, Var, Let, If, Call };

  Kind kind = Kind::IntLit;
  int pos = 0;  // byte offset in source, for diagnostics
  int64_t int_val = 0;
  double float_val = 0;
  bool bool_val = false;
  std::string name;  // var reference, call head, or string literal payload
  std::vector<AstNode> children;  // list elements / call args / if parts
  std::vector<std::pair<std::string, AstNode>> bindings;  // let
};

struct CompileError {
  enum class Code { ParseError, UnknownCallable, ArityError, UnboundVariable };
  Code code;
  std::string message;
  int pos = 0;

  const char* code_name() const;
};

// Callable heads: the primitives library, the segment tool, and general
// glue (arithmetic, comparisons, logic, list access).
struct HeadInfo {
  const char* name;
  int min_arity;
  int max_arity;  // -1 = unbounded
  // Canonical primitive name for usage analysis ("argmin/argmax" merges two
  // heads); null for glue heads and the segment tool.
  const char* canonical_primitive;
};

std::span<const HeadInfo> head_registry();
const HeadInfo* find_head(std::string_view name);

std::variant<AstNode, CompileError> parse(std::string_view text);
std::optional<CompileError> validate(const AstNode& root);

// Parsed+validated program with its verbatim source text. Default-constructed
// instances are empty placeholders; compile() is the only way to obtain a
// usable program.
class ProgramSource {
 public:
  ProgramSource() = default;

  static std::variant<ProgramSource, CompileError> compile(std::string text);

  bool empty() const { return ast_ == nullptr; }
  const std::string& text() const { return text_; }
  const AstNode& ast() const { return *ast_; }

 private:
  ProgramSource(std::string text, std::shared_ptr<const AstNode> ast)
      : text_(std::move(text)), ast_(std::move(ast)) {}
  std::string text_;
  std::shared_ptr<const AstNode> ast_;
};

struct ExecLimits {
  int64_t step_budget = 1'000'000;
  int64_t max_maskset = 4096;
};

struct ExecFailure {
  enum class Kind {
    ParseError,
    ValidationError,
    RuntimeError,
    StepBudgetExceeded,
    MaskSetOverflow,
    NonDeterministic,
  };
  Kind kind;
  std::optional<prim::ErrKind> runtime_kind;  // set for RuntimeError
  std::string detail;

  const char* kind_name() const;
};

// Exactly one branch populated; carries only the final value, never any
// execution trace.
class ExecOutcome {
 public:
  static ExecOutcome success(Value v) { return ExecOutcome(std::move(v)); }
  static ExecOutcome failed(ExecFailure f) { return ExecOutcome(std::move(f)); }

  bool ok() const { return state_.index() == 0; }
  const Value& value() const { return std::get<0>(state_); }
  const ExecFailure& failure() const { return std::get<1>(state_); }

  nlohmann::json to_json() const;

 private:
  explicit ExecOutcome(Value v) : state_(std::in_place_index<0>, std::move(v)) {}
  explicit ExecOutcome(ExecFailure f) : state_(std::in_place_index<1>, std::move(f)) {}
  std::variant<Value, ExecFailure> state_;
};

ExecOutcome evaluate(const ProgramSource& prog, const ImageRef& image, const Value& arg,
                     const SegmenterProvider& seg, const ExecLimits& limits);

struct Invalid {
  std::string reason;
};

// Runs evaluate twice; valid only when both runs succeed, agree bit-for-bit,
// and the result is Scorable.
std::variant<Value, Invalid> check_problem_validity(const ProgramSource& prog,
                                                    const ImageRef& image, const Value& arg,
                                                    const SegmenterProvider& seg,
                                                    const ExecLimits& limits);

}  // namespace geoprog
