#pragma once

#include <memory>
#include <string>
#include <vector>

#include "geoprog/selfplay.hpp"

// Scripted in-process policies for desk-scale runs and tests. The proposer
// side draws from a small pool of program templates; the solver side either
// answers correctly every time by consulting the executor and the bank
// (oracle), or answers correctly with a fixed probability (bernoulli:<p>).

namespace geoprog {

struct ScriptedEnv {
  const Dataset* dataset = nullptr;
  const SegmenterProvider* seg = nullptr;
  const BankSet* banks = nullptr;  // answer lookup; a test-scale cheat by design
  std::vector<std::string> phrases;
  ExecLimits limits;
};

enum class SolverStyle { Oracle, Bernoulli };

class ScriptedPolicy final : public Policy {
 public:
  ScriptedPolicy(ScriptedEnv env, SolverStyle style, double accuracy = 1.0)
      : env_(std::move(env)), style_(style), accuracy_(accuracy) {}

  std::optional<std::string> propose(const ProposalRequest& request, Rng& rng) override;
  std::optional<std::string> solve(const SolverView& view, Rng& rng) override;
  bool reentrant() const override { return true; }

 private:
  std::string correct_answer(const Problem& problem) const;
  std::string wrong_answer(const Problem& problem) const;

  ScriptedEnv env_;
  SolverStyle style_;
  double accuracy_;
};

// Parses "oracle" | "bernoulli:<p>" into a scripted policy.
std::unique_ptr<Policy> make_scripted_policy(const std::string& name, ScriptedEnv env);

}  // namespace geoprog
