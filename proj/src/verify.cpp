#include "geoprog/verify.hpp"

#include <algorithm>
#include <cmath>

#include "geoprog/tools.hpp"

namespace geoprog {

const char* mode_tag(Mode m) {
  switch (m) {
    case Mode::Abduction: return "abd";
    case Mode::Deduction: return "ded";
    case Mode::Induction: return "ind";
  }
  return "?";
}

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Abduction: return "abduction";
    case Mode::Deduction: return "deduction";
    case Mode::Induction: return "induction";
  }
  return "?";
}

const char* role_tag(Role r) { return r == Role::Proposer ? "proposer" : "solver"; }

std::optional<Mode> mode_from_tag(std::string_view tag) {
  if (tag == "abd" || tag == "abduction") return Mode::Abduction;
  if (tag == "ded" || tag == "deduction") return Mode::Deduction;
  if (tag == "ind" || tag == "induction") return Mode::Induction;
  return std::nullopt;
}

double reward_abduction(const ProgramSource& program, const ImageRef& image,
                        const Value& output, const Value& candidate_arg,
                        const SegmenterProvider& seg, const ExecLimits& limits) {
  const ExecOutcome out = evaluate(program, image, candidate_arg, seg, limits);
  if (!out.ok() || !out.value().is_scorable()) return 0.0;
  return value_equal(out.value(), output) ? 1.0 : 0.0;
}

namespace {

double box_iou(const Box& a, const Box& b) {
  const int ix_min = std::max(a.xmin, b.xmin);
  const int iy_min = std::max(a.ymin, b.ymin);
  const int ix_max = std::min(a.xmax, b.xmax);
  const int iy_max = std::min(a.ymax, b.ymax);
  if (ix_min > ix_max || iy_min > iy_max) return 0.0;
  const double inter = double(ix_max - ix_min + 1) * double(iy_max - iy_min + 1);
  const double uni = double(a.pixel_area()) + double(b.pixel_area()) - inter;
  return inter / uni;
}

}  // namespace

double reward_deduction(const Value& predicted, const Value& output) {
  if (output.is_numeric()) {
    if (!predicted.is_numeric()) return 0.0;
    const double o = output.numeric();
    const double p = predicted.numeric();
    return std::max(0.0, 1.0 - std::abs(p - o) / std::max(std::abs(o), 1.0));
  }
  switch (output.kind()) {
    case ValueKind::Str:
      return predicted.kind() == ValueKind::Str &&
                     normalize_phrase(predicted.as_str()) == normalize_phrase(output.as_str())
                 ? 1.0
                 : 0.0;
    case ValueKind::Bool:
      return predicted.kind() == ValueKind::Bool && predicted.as_bool() == output.as_bool()
                 ? 1.0
                 : 0.0;
    case ValueKind::Box:
      return predicted.kind() == ValueKind::Box ? box_iou(predicted.as_box(), output.as_box())
                                                : 0.0;
    default:
      return 0.0;  // non-scorable reference never matches
  }
}

double reward_induction(const std::string& candidate_program, const InductionViews& views,
                        const ImageRef& image, const SegmenterProvider& seg,
                        const ExecLimits& limits) {
  if (views.heldout.empty()) return 0.0;
  auto compiled = ProgramSource::compile(candidate_program);
  if (std::holds_alternative<CompileError>(compiled)) return 0.0;
  const ProgramSource& prog = std::get<ProgramSource>(compiled);
  double hits = 0;
  for (const IoPair& pair : views.heldout) {
    const ExecOutcome out = evaluate(prog, image, pair.arg, seg, limits);
    if (out.ok() && out.value().is_scorable() && pair.output.is_scorable() &&
        value_equal(out.value(), pair.output))
      hits += 1;
  }
  return hits / double(views.heldout.size());
}

double proposer_reward(std::span<const double> rollout_rewards) {
  if (rollout_rewards.empty())
    throw prim::PrimitiveError(prim::ErrKind::EmptyCollection,
                               "proposer_reward: no rollouts");
  double sum = 0;
  for (double r : rollout_rewards) sum += r;
  const double mean = sum / double(rollout_rewards.size());
  if (mean <= 0.0) return 0.0;
  return 1.0 - mean;
}

void task_relative_advantages(std::span<AdvantageItem> items) {
  constexpr double kEps = 1e-6;
  for (Role role : {Role::Proposer, Role::Solver}) {
    for (Mode mode : kAllModes) {
      const TaskKey key{role, mode};
      double sum = 0;
      size_t n = 0;
      double lo = 0, hi = 0;
      for (const AdvantageItem& it : items)
        if (it.key == key) {
          if (n == 0) lo = hi = it.reward;
          lo = std::min(lo, it.reward);
          hi = std::max(hi, it.reward);
          sum += it.reward;
          ++n;
        }
      if (n == 0) continue;
      if (lo == hi) {  // zero variance (includes singletons): pin to 0 exactly
        for (AdvantageItem& it : items)
          if (it.key == key) it.advantage = 0.0;
        continue;
      }
      const double mean = sum / double(n);
      double var = 0;
      for (const AdvantageItem& it : items)
        if (it.key == key) var += (it.reward - mean) * (it.reward - mean);
      const double std_dev = std::sqrt(var / double(n));  // population std
      for (AdvantageItem& it : items)
        if (it.key == key) it.advantage = (it.reward - mean) / (std_dev + kEps);
    }
  }
}

double joint_step_objective(double proposer_mean, double solver_mean, double lambda) {
  return lambda * proposer_mean + solver_mean;
}

Value majority_vote(std::span<const Value> answers) {
  if (answers.empty())
    throw prim::PrimitiveError(prim::ErrKind::EmptyCollection, "majority_vote: no answers");
  std::vector<size_t> rep;    // index of each class representative
  std::vector<size_t> votes;  // vote count per class
  for (size_t i = 0; i < answers.size(); ++i) {
    bool matched = false;
    for (size_t c = 0; c < rep.size(); ++c) {
      if (value_equal(answers[i], answers[rep[c]])) {
        ++votes[c];
        matched = true;
        break;
      }
    }
    if (!matched) {
      rep.push_back(i);
      votes.push_back(1);
    }
  }
  size_t best = 0;
  for (size_t c = 1; c < rep.size(); ++c)
    if (votes[c] > votes[best]) best = c;  // ties keep the earlier class
  return answers[rep[best]];
}

}  // namespace geoprog
