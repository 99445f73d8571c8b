#include "geoprog/policies.hpp"

#include <cmath>

namespace geoprog {

using nlohmann::json;

namespace {

std::string tagged(const Value& v) { return value_to_json(v).dump(); }

// Program templates over one phrase (arg is a string) or two (arg is a
// two-string list). Some templates fail on images where the phrase segments
// to nothing; those proposals are meant to exercise the rejection path.
struct Template {
  const char* question;  // %1/%2 substituted with phrases
  const char* program;
  int phrase_count;
};

constexpr Template kTemplates[] = {
    {"Is there a %1?", "(exists (segment image arg))", 1},
    {"How many %1 instances are visible?", "(count (segment image arg))", 1},
    {"What is the total area covered by %1?", "(area (union (segment image arg)))", 1},
    {"Which covers more area, %1 or %2?",
     "(let ((m1 (union (segment image (nth arg 0)))) (m2 (union (segment image (nth arg 1)))))"
     " (if (> (area m1) (area m2)) (nth arg 0) (nth arg 1)))",
     2},
    {"In which quadrant is the largest %1?",
     "(let ((ms (segment image arg))) (quadrant (centroid (nth ms (largest ms))) image))", 1},
    {"What is the bounding box of all %1?", "(bbox (union (segment image arg)))", 1},
    {"In which quadrant is the %1 nearest to the %2?",
     "(let ((xs (segment image (nth arg 0))) (ref (union (segment image (nth arg 1)))))"
     " (quadrant (centroid (nth xs (nearest xs ref))) image))",
     2},
    {"Are there more %1 than %2?",
     "(> (count (segment image (nth arg 0))) (count (segment image (nth arg 1))))", 2},
};

std::string substitute(std::string text, const std::string& p1, const std::string& p2) {
  auto replace_all = [&](const std::string& from, const std::string& to) {
    for (size_t at = text.find(from); at != std::string::npos; at = text.find(from, at)) {
      text.replace(at, from.size(), to);
      at += to.size();
    }
  };
  replace_all("%1", p1);
  replace_all("%2", p2);
  return text;
}

}  // namespace

std::optional<std::string> ScriptedPolicy::propose(const ProposalRequest& request, Rng& rng) {
  if (request.mode == Mode::Induction) {
    // The environment fixed the program; supply io arguments of the shape the
    // program expects (two-phrase templates destructure arg with nth).
    const bool wants_pair =
        request.program && request.program->find("(nth arg") != std::string::npos;
    json io_args = json::array();
    for (size_t t = 0; t < request.n_io; ++t) {
      const std::string& p1 = env_.phrases[uniform_below(rng, env_.phrases.size())];
      if (wants_pair) {
        const std::string& p2 = env_.phrases[uniform_below(rng, env_.phrases.size())];
        io_args.push_back(value_to_json(
            Value::list({Value::str(p1), Value::str(p2)})));
      } else {
        io_args.push_back(value_to_json(Value::str(p1)));
      }
    }
    json proposal = {{"q", "What relation links each input to its output?"},
                     {"io_args", io_args}};
    return proposal.dump();
  }

  const Template& tmpl = kTemplates[uniform_below(rng, std::size(kTemplates))];
  const std::string& p1 = env_.phrases[uniform_below(rng, env_.phrases.size())];
  const std::string& p2 = env_.phrases[uniform_below(rng, env_.phrases.size())];
  json proposal;
  proposal["q"] = substitute(tmpl.question, p1, p2);
  proposal["p"] = tmpl.program;
  proposal["a"] = tmpl.phrase_count == 1
                      ? value_to_json(Value::str(p1))
                      : value_to_json(Value::list({Value::str(p1), Value::str(p2)}));
  return proposal.dump();
}

std::string ScriptedPolicy::correct_answer(const Problem& problem) const {
  switch (problem.mode) {
    case Mode::Abduction:
      return tagged(problem.arg);
    case Mode::Deduction: {
      // Cheat through the executor rather than reading the stored output.
      const ImageRef* image = env_.dataset->find(problem.image_id);
      const ExecOutcome out =
          evaluate(problem.program, *image, problem.arg, *env_.seg, env_.limits);
      return out.ok() ? tagged(out.value()) : tagged(problem.output);
    }
    case Mode::Induction:
      return problem.program.text();
  }
  return "";
}

std::string ScriptedPolicy::wrong_answer(const Problem& problem) const {
  switch (problem.mode) {
    case Mode::Abduction:
      // An int argument fails the segment call's type check, so the reward is
      // 0 no matter what the program does with it.
      return tagged(Value::integer(-987654));
    case Mode::Deduction: {
      const Value& o = problem.output;
      if (o.kind() == ValueKind::Bool) return tagged(Value::boolean(!o.as_bool()));
      if (o.is_numeric()) {
        const double off = std::max(std::abs(o.numeric()), 1.0) + 1.0;
        return tagged(Value::real(o.numeric() + off));
      }
      if (o.kind() == ValueKind::Str) return tagged(Value::str(o.as_str() + " x"));
      if (o.kind() == ValueKind::Box) {
        const Box& b = o.as_box();
        const int w = b.xmax - b.xmin + 1;
        const int h = b.ymax - b.ymin + 1;
        return tagged(Value::box(Box{b.xmin + w, b.ymin + h, b.xmax + w, b.ymax + h}));
      }
      return tagged(Value::str("wrong"));
    }
    case Mode::Induction:
      return "-987654";  // constant program matching no realistic output
  }
  return "";
}

std::optional<std::string> ScriptedPolicy::solve(const SolverView& view, Rng& rng) {
  const Problem* problem = env_.banks->find(view.problem_id);
  if (!problem) return std::nullopt;
  if (style_ == SolverStyle::Oracle) return correct_answer(*problem);
  return flip(rng, accuracy_) ? correct_answer(*problem) : wrong_answer(*problem);
}

std::unique_ptr<Policy> make_scripted_policy(const std::string& name, ScriptedEnv env) {
  if (name == "oracle")
    return std::make_unique<ScriptedPolicy>(std::move(env), SolverStyle::Oracle);
  const std::string prefix = "bernoulli:";
  if (name.rfind(prefix, 0) == 0) {
    const double p = std::stod(name.substr(prefix.size()));
    if (!(p >= 0.0 && p <= 1.0)) throw Error("bernoulli accuracy must be in [0,1]");
    return std::make_unique<ScriptedPolicy>(std::move(env), SolverStyle::Bernoulli, p);
  }
  throw Error("unknown scripted policy: " + name +
              " (expected oracle or bernoulli:<p>)");
}

}  // namespace geoprog
