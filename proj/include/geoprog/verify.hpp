#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geoprog/program.hpp"
#include "geoprog/value.hpp"

// Reward computation for both roles: solver rewards under the three
// reasoning modes, the learnability proposer reward, joint weighting, task-
// relative advantages, and majority-vote answer aggregation.

namespace geoprog {

enum class Mode { Abduction, Deduction, Induction };
enum class Role { Proposer, Solver };

const char* mode_tag(Mode m);        // "abd" / "ded" / "ind"
const char* mode_name(Mode m);       // "abduction" / ...
const char* role_tag(Role r);        // "proposer" / "solver"
std::optional<Mode> mode_from_tag(std::string_view tag);

constexpr Mode kAllModes[] = {Mode::Abduction, Mode::Deduction, Mode::Induction};

struct TaskKey {
  Role role;
  Mode mode;
  bool operator==(const TaskKey&) const = default;
};

struct IoPair {
  Value arg;
  Value output;
};

struct InductionViews {
  std::vector<IoPair> visible;
  std::vector<IoPair> heldout;
};

// 1 iff executing the program on the candidate argument reproduces the stored
// output; any execution failure scores 0.
double reward_abduction(const ProgramSource& program, const ImageRef& image,
                        const Value& output, const Value& candidate_arg,
                        const SegmenterProvider& seg, const ExecLimits& limits);

// Type-aware scoring by the reference output's branch: numeric, string,
// boolean, or bounding box (pixel-count IoU). Branch mismatch scores 0.
double reward_deduction(const Value& predicted, const Value& output);

// Fraction of held-out pairs the candidate program reproduces; compile
// failures and per-pair execution failures score 0.
double reward_induction(const std::string& candidate_program, const InductionViews& views,
                        const ImageRef& image, const SegmenterProvider& seg,
                        const ExecLimits& limits);

// Learnability: 0 when no rollout succeeded at all, otherwise 1 - mean.
// Throws PrimitiveError(EmptyCollection) on an empty rollout list.
double proposer_reward(std::span<const double> rollout_rewards);

struct AdvantageItem {
  TaskKey key;
  double reward = 0;
  double advantage = 0;
};

// Standardizes rewards within each (role, mode) group: (r - mean)/(std + eps)
// with population std and eps = 1e-6. Groups normalize independently.
void task_relative_advantages(std::span<AdvantageItem> items);

// Diagnostic scalar: lambda * proposer_mean + solver_mean.
double joint_step_objective(double proposer_mean, double solver_mean, double lambda);

// Most frequent value under value_equal; ties resolve to the class seen
// first. Throws PrimitiveError(EmptyCollection) on empty input.
Value majority_vote(std::span<const Value> answers);

}  // namespace geoprog
