#include <doctest.h>

#include <set>

#include "geoprog/program.hpp"
#include "support/fixtures.hpp"

using namespace geoprog;

namespace {

CompileError compile_error(const std::string& text) {
  auto r = ProgramSource::compile(text);
  REQUIRE(std::holds_alternative<CompileError>(r));
  return std::get<CompileError>(r);
}

ExecOutcome run_text(const std::string& text, const fixtures::SeedWorld& world,
                     const Value& arg, ExecLimits limits = {}) {
  return evaluate(fixtures::compile_or_throw(text), world.image, arg, *world.oracle, limits);
}

Value run_ok(const std::string& text, const fixtures::SeedWorld& world,
             const Value& arg = Value::integer(0)) {
  const ExecOutcome out = run_text(text, world, arg);
  if (!out.ok()) FAIL("execution failed: ", out.to_json().dump());
  return out.value();
}

prim::ErrKind runtime_kind(const ExecOutcome& out) {
  REQUIRE_FALSE(out.ok());
  REQUIRE(out.failure().kind == ExecFailure::Kind::RuntimeError);
  return *out.failure().runtime_kind;
}

}  // namespace

TEST_CASE("parse: the seed program and basic forms") {
  auto parsed = parse("(exists (segment image arg))");
  REQUIRE(std::holds_alternative<AstNode>(parsed));
  const AstNode& root = std::get<AstNode>(parsed);
  CHECK(root.kind == AstNode::Kind::Call);
  CHECK(root.name == "exists");
  REQUIRE(root.children.size() == 1);
  CHECK(root.children[0].name == "segment");

  auto cond = parse("(if true 1 2)");
  REQUIRE(std::holds_alternative<AstNode>(cond));
  CHECK(std::get<AstNode>(cond).kind == AstNode::Kind::If);
}

TEST_CASE("parse errors carry a position") {
  auto r = parse("(area \"unterminated");
  REQUIRE(std::holds_alternative<CompileError>(r));
  CHECK(std::get<CompileError>(r).code == CompileError::Code::ParseError);
  CHECK(std::get<CompileError>(r).pos > 0);

  CHECK(std::holds_alternative<CompileError>(parse("(area m))")));  // trailing
  CHECK(std::holds_alternative<CompileError>(parse("(area")));      // missing )
  CHECK(std::holds_alternative<CompileError>(parse("")));           // empty

  std::string deep;
  for (int i = 0; i < 2000; ++i) deep += "(not ";
  deep += "true";
  for (int i = 0; i < 2000; ++i) deep += ")";
  CHECK(std::holds_alternative<CompileError>(parse(deep)));  // nesting cap
}

TEST_CASE("validate: unknown callables, arity, unbound variables") {
  CHECK(compile_error("(foo image)").code == CompileError::Code::UnknownCallable);
  CHECK(compile_error("(random 1)").code == CompileError::Code::UnknownCallable);
  CHECK(compile_error("(area)").code == CompileError::Code::ArityError);
  CHECK(compile_error("(area arg arg)").code == CompileError::Code::ArityError);
  CHECK(compile_error("(exists bogus)").code == CompileError::Code::UnboundVariable);
  // let-bound names become visible, sequentially.
  CHECK(std::holds_alternative<ProgramSource>(
      ProgramSource::compile("(let ((x 1) (y (+ x 1))) (+ x y))")));
  CHECK(compile_error("(let ((x y) (y 1)) x)").code == CompileError::Code::UnboundVariable);
}

TEST_CASE("evaluate: seed program against the fixture oracle") {
  fixtures::SeedWorld world;
  CHECK(run_ok(fixtures::seed_program_text(), world, Value::str("building")).as_bool());
  CHECK_FALSE(run_ok(fixtures::seed_program_text(), world, Value::str("zeppelin")).as_bool());
}

TEST_CASE("evaluate: ship-quadrant program answers TR on its fixture") {
  fixtures::ShipWorld world;
  const auto prog = fixtures::compile_or_throw(fixtures::ship_quadrant_program_text());
  const ExecOutcome out = evaluate(prog, world.image, Value::str("ship"), *world.oracle, {});
  REQUIRE(out.ok());
  CHECK(out.value().as_str() == "TR");
}

TEST_CASE("arithmetic, comparisons, and logic") {
  fixtures::SeedWorld world;
  CHECK(run_ok("(+ 2 3)", world).as_int() == 5);
  CHECK(run_ok("(* 2 3.5)", world).as_float() == 7.0);
  CHECK(run_ok("(/ 7 2)", world).as_float() == 3.5);  // division is float
  CHECK(run_ok("(- 2 5)", world).as_int() == -3);
  CHECK(run_ok("(< 1 2)", world).as_bool());
  CHECK(run_ok("(>= 2 2)", world).as_bool());
  CHECK(run_ok("(= 7 7.0)", world).as_bool());
  CHECK(run_ok("(= \"Cargo \" \"cargo\")", world).as_bool());
  CHECK(run_ok("(and true (not false))", world).as_bool());
  CHECK_FALSE(run_ok("(or false false)", world).as_bool());

  CHECK(runtime_kind(run_text("(/ 1 0)", world, Value::integer(0))) ==
        prim::ErrKind::DivByZero);
  CHECK(runtime_kind(run_text("(/ 1.0 0.0)", world, Value::integer(0))) ==
        prim::ErrKind::DivByZero);
  CHECK(runtime_kind(run_text("(* 9223372036854775807 2)", world, Value::integer(0))) ==
        prim::ErrKind::NonFinite);
  CHECK(runtime_kind(run_text("(+ 1 \"x\")", world, Value::integer(0))) ==
        prim::ErrKind::TypeError);
  CHECK(runtime_kind(run_text("(if 1 2 3)", world, Value::integer(0))) ==
        prim::ErrKind::TypeError);
}

TEST_CASE("lists, nth, len, pair, and let scoping") {
  fixtures::SeedWorld world;
  CHECK(run_ok("(nth (list 10 20 30) 1)", world).as_int() == 20);
  CHECK(run_ok("(len (list 1 2 3))", world).as_int() == 3);
  CHECK(run_ok("(nth (pair \"a\" \"b\") 0)", world).as_str() == "a");
  CHECK(run_ok("(let ((x 1)) (let ((x 2)) x))", world).as_int() == 2);  // shadowing
  CHECK(run_ok("(nth arg 1)", world, Value::list({Value::str("p"), Value::str("q")})).as_str() ==
        "q");
  CHECK(runtime_kind(run_text("(nth (list 1) 5)", world, Value::integer(0))) ==
        prim::ErrKind::TypeError);
}

TEST_CASE("step budget halts evaluation") {
  fixtures::SeedWorld world;
  ExecLimits tight;
  tight.step_budget = 5;
  const ExecOutcome out = run_text("(+ (+ 1 2) (+ 3 (+ 4 5)))", world, Value::integer(0), tight);
  REQUIRE_FALSE(out.ok());
  CHECK(out.failure().kind == ExecFailure::Kind::StepBudgetExceeded);
}

TEST_CASE("maskset cap stops runaway components") {
  // Isolated pixels on a stride-2 lattice: one component each even under
  // 8-connectivity.
  Dataset ds;
  ds.add({"checker", 32, 32});
  OracleIndex oracle(ds);
  Mask board(32, 32);
  for (int y = 0; y < 32; y += 2)
    for (int x = 0; x < 32; x += 2) board.set(x, y);
  MaskSet entry;
  entry.elems.push_back(board);
  oracle.add_entry("checker", "tile", std::move(entry));

  ExecLimits limits;
  limits.max_maskset = 16;
  const auto prog =
      fixtures::compile_or_throw("(count (components (union (segment image arg))))");
  const ExecOutcome out =
      evaluate(prog, *ds.find("checker"), Value::str("tile"), oracle, limits);
  REQUIRE_FALSE(out.ok());
  CHECK(out.failure().kind == ExecFailure::Kind::MaskSetOverflow);
}

TEST_CASE("check_problem_validity gates on success, determinism, and scorability") {
  fixtures::SeedWorld world;
  const ExecLimits limits;

  auto valid = check_problem_validity(fixtures::compile_or_throw(fixtures::seed_program_text()),
                                      world.image, Value::str("building"), *world.oracle, limits);
  REQUIRE(std::holds_alternative<Value>(valid));
  CHECK(std::get<Value>(valid).as_bool());

  auto not_scorable =
      check_problem_validity(fixtures::compile_or_throw("(union (segment image arg))"),
                             world.image, Value::str("building"), *world.oracle, limits);
  REQUIRE(std::holds_alternative<Invalid>(not_scorable));
  CHECK(std::get<Invalid>(not_scorable).reason.find("NotScorable") == 0);

  auto failing =
      check_problem_validity(fixtures::compile_or_throw("(bbox (union (segment image arg)))"),
                             world.image, Value::str("zeppelin"), *world.oracle, limits);
  REQUIRE(std::holds_alternative<Invalid>(failing));
  CHECK(std::get<Invalid>(failing).reason.find("RuntimeError") == 0);
}

TEST_CASE("purity: a thousand evaluations agree bit-for-bit") {
  fixtures::ShipWorld world;
  const auto prog = fixtures::compile_or_throw(
      "(let ((ms (segment image arg)))"
      " (distance (nth ms 0) (nth ms (largest ms))))");
  const ExecOutcome first = evaluate(prog, world.image, Value::str("ship"), *world.oracle, {});
  REQUIRE(first.ok());
  for (int i = 0; i < 1000; ++i) {
    const ExecOutcome again = evaluate(prog, world.image, Value::str("ship"), *world.oracle, {});
    REQUIRE(again.ok());
    REQUIRE(exact_equal(again.value(), first.value()));
  }
}

// Random program generator over the grammar: every generated program must
// either evaluate to a value or fail cleanly within the step budget. There is
// no recursion in the language, so termination needs no fuel argument.
namespace {

std::string random_expr(Rng& rng, int depth) {
  const char* leaves[] = {"1", "2.5", "true", "\"ship\"", "arg", "(segment image \"ship\")"};
  if (depth <= 0 || flip(rng, 0.3))
    return leaves[uniform_below(rng, std::size(leaves))];
  switch (uniform_below(rng, 8)) {
    case 0: return "(+ " + random_expr(rng, depth - 1) + " " + random_expr(rng, depth - 1) + ")";
    case 1: return "(count " + random_expr(rng, depth - 1) + ")";
    case 2: return "(exists " + random_expr(rng, depth - 1) + ")";
    case 3:
      return "(if (exists (segment image \"ship\")) " + random_expr(rng, depth - 1) + " " +
             random_expr(rng, depth - 1) + ")";
    case 4: return "(let ((v " + random_expr(rng, depth - 1) + ")) v)";
    case 5: return "(list " + random_expr(rng, depth - 1) + ")";
    case 6: return "(area (union " + random_expr(rng, depth - 1) + "))";
    default:
      return "(nth (list " + random_expr(rng, depth - 1) + " " + random_expr(rng, depth - 1) +
             ") 0)";
  }
}

}  // namespace

TEST_CASE("fuzzed grammar programs terminate with a value or a clean failure") {
  fixtures::ShipWorld world;
  Rng rng = derive_rng({41, 0});
  ExecLimits limits;
  limits.step_budget = 100000;
  for (int trial = 0; trial < 300; ++trial) {
    const std::string text = random_expr(rng, 4);
    auto compiled = ProgramSource::compile(text);
    REQUIRE(std::holds_alternative<ProgramSource>(compiled));
    const ExecOutcome out = evaluate(std::get<ProgramSource>(compiled), world.image,
                                     Value::str("ship"), *world.oracle, limits);
    if (!out.ok()) {
      const auto k = out.failure().kind;
      CHECK((k == ExecFailure::Kind::RuntimeError ||
             k == ExecFailure::Kind::StepBudgetExceeded ||
             k == ExecFailure::Kind::MaskSetOverflow));
    }
  }
}

TEST_CASE("outcomes expose only the final value, never a trace") {
  fixtures::SeedWorld world;
  const auto ok = run_text(fixtures::seed_program_text(), world, Value::str("building"));
  const nlohmann::json ok_json = ok.to_json();
  std::set<std::string> ok_keys;
  for (const auto& [k, _] : ok_json.items()) ok_keys.insert(k);
  CHECK(ok_keys == std::set<std::string>{"status", "value"});

  const auto failed = run_text("(/ 1 0)", world, Value::integer(0));
  const nlohmann::json fail_json = failed.to_json();
  std::set<std::string> fail_keys;
  for (const auto& [k, _] : fail_json.items()) fail_keys.insert(k);
  for (const auto& k : fail_keys)
    CHECK((k == "status" || k == "kind" || k == "runtime_kind" || k == "detail"));
}
