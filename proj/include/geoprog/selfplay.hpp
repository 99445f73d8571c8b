#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geoprog/bank.hpp"

// The self-play orchestrator: per-step propose/solve phases across the three
// reasoning modes, rollout scoring, reward assembly, and the pluggable policy
// interface. No parameter updates happen here; the contract ends at rewards
// plus advantages, which a training harness may consume.

namespace geoprog {

struct SelfPlayConfig {
  int B = 32;      // proposals per mode
  int K = 6;       // in-context references
  int R = 8;       // solver rollouts per problem
  int N_io = 6;    // induction input-output pairs (even)
  int N_seed = 100;
  double lambda = 1.0;
  int total_steps = 150;
  ExecLimits limits;
  uint64_t rng_seed = 0;
  int jobs = 1;
  double policy_timeout_s = 30.0;

  void check() const;  // throws Error on bad values
};

// What the solver is allowed to see, per reasoning mode:
//   abduction: (I, p, o)   deduction: (I, p, a)   induction: (I, visible pairs)
struct SolverView {
  std::string problem_id;
  Mode mode = Mode::Abduction;
  ImageRef image;
  std::optional<std::string> program;
  std::optional<Value> output;
  std::optional<Value> arg;
  std::optional<std::vector<IoPair>> visible_pairs;
};

SolverView make_solver_view(const Problem& problem, const ImageRef& image,
                            const InductionViews* views);

// Uniform random equal split of the io pairs into visible/held-out halves.
// Throws Error("BadPairCount") unless the pair count matches n_io and is even.
InductionViews make_induction_views(const Problem& problem, size_t n_io, Rng& rng);

struct ProposalRequest {
  Mode mode = Mode::Abduction;
  ImageRef image;
  std::vector<const Problem*> references;
  std::optional<std::string> program;  // induction: the sampled source program
  size_t n_io = 0;                     // induction: pairs to supply
};

// A single multimodal policy serving both roles. Text in, text out: proposals
// are the bank problem schema minus id/output; answers are tagged JSON values
// (abduction/deduction) or program text (induction). nullopt marks a policy
// failure (timeout, crash) and scores zero / rejects.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::optional<std::string> propose(const ProposalRequest& request, Rng& rng) = 0;
  virtual std::optional<std::string> solve(const SolverView& view, Rng& rng) = 0;
  // Reentrant policies may be called from several rollout workers at once.
  virtual bool reentrant() const { return false; }
};

struct ProposalOutcome {
  std::string id;
  bool accepted = false;
  std::string reason;  // rejection reason when not accepted
};

struct ProposePhaseResult {
  std::vector<ProposalOutcome> attempts;  // in attempt order, one per proposal
  std::vector<std::string> accepted_ids;  // grown into the bank
  size_t rejected_count() const { return attempts.size() - accepted_ids.size(); }
};

ProposePhaseResult propose_phase(Mode mode, Policy& policy, BankSet& banks,
                                 const Dataset& dataset, const SegmenterProvider& seg,
                                 const SelfPlayConfig& cfg, int64_t step);

// Per-problem reward record: the R rollout rewards, their mean, and (for this
// step's proposals) the learnability reward.
struct RewardRecord {
  std::string problem_id;
  TaskKey key{Role::Solver, Mode::Abduction};
  bool is_proposal = false;
  std::vector<double> rollout_rewards;
  double mean_reward = 0;
  std::optional<double> prop_reward;  // proposals only
  double advantage = 0;
};

std::vector<RewardRecord> solve_phase(Mode mode, Policy& policy,
                                      std::span<const Problem* const> batch,
                                      const std::vector<std::string>& proposal_ids,
                                      const Dataset& dataset, const SegmenterProvider& seg,
                                      const SelfPlayConfig& cfg, int64_t step);

struct EpisodeLogEntry {
  int64_t step = 0;
  Role role = Role::Solver;
  Mode mode = Mode::Abduction;
  std::string problem_id;
  int rollout = -1;  // -1 for proposer entries
  double reward = 0;
  double advantage = 0;
  std::string rejection;  // proposals only; empty when accepted

  nlohmann::json to_json() const;
};

struct StepReport {
  int64_t step = 0;
  size_t bank_sizes[3] = {0, 0, 0};
  size_t accepted[3] = {0, 0, 0};
  size_t rejected[3] = {0, 0, 0};
  double group_mean[2][3] = {};  // [role][mode] mean reward
  double proposer_mean = 0;
  double solver_mean = 0;
  double joint_objective = 0;  // lambda * proposer_mean + solver_mean

  nlohmann::json to_json() const;
};

StepReport run_step(Policy& policy, BankSet& banks, const Dataset& dataset,
                    const SegmenterProvider& seg, const SelfPlayConfig& cfg, int64_t step,
                    std::vector<EpisodeLogEntry>& log_out);

// Full run driver with per-step persistence and resume-from-last-step.
struct RunPaths {
  std::filesystem::path bank_dir;
  std::filesystem::path log_dir;
};

struct RunResult {
  int64_t steps_executed = 0;
  int64_t first_step = 0;
  std::vector<StepReport> reports;
};

RunResult run_selfplay(Policy& policy, BankSet& banks, const Dataset& dataset,
                       const SegmenterProvider& seg, const SelfPlayConfig& cfg,
                       const RunPaths& paths);

}  // namespace geoprog
