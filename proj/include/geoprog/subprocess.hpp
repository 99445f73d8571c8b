#pragma once

#include <string>

#include "geoprog/selfplay.hpp"

// External policy attachment: a child process speaking newline-delimited JSON
// over its standard streams. One request per line:
//   {"kind":"propose"|"solve", "mode":"abd|ded|ind", "image_id":..., "payload":{...}}
// and one response per line: {"text": "..."}. A call that times out or hits a
// dead child yields nullopt, which the orchestrator scores as zero (solve) or
// rejects (propose).

namespace geoprog {

class ExternalPolicy final : public Policy {
 public:
  // Launches `command` via /bin/sh -c. Throws IoError when spawning fails.
  ExternalPolicy(std::string command, double timeout_s);
  ~ExternalPolicy() override;

  ExternalPolicy(const ExternalPolicy&) = delete;
  ExternalPolicy& operator=(const ExternalPolicy&) = delete;

  std::optional<std::string> propose(const ProposalRequest& request, Rng& rng) override;
  std::optional<std::string> solve(const SolverView& view, Rng& rng) override;
  bool reentrant() const override { return false; }  // single request stream

  bool alive() const { return pid_ > 0 && !dead_; }

 private:
  std::optional<std::string> transact(const std::string& line);
  void shutdown();

  std::string command_;
  double timeout_s_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  bool dead_ = false;
  std::string buffer_;
};

}  // namespace geoprog
