#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "geoprog/rng.hpp"
#include "geoprog/verify.hpp"

// The three append-only problem banks: seeding, growth under the validity
// gate, reference sampling, shortfall refill, and JSONL persistence.

namespace geoprog {

struct Problem {
  std::string id;
  Mode mode = Mode::Abduction;
  std::string image_id;
  std::string question;
  ProgramSource program;
  Value arg;
  Value output;
  std::vector<IoPair> io_pairs;  // induction only, |io_pairs| = N_io
  int64_t created_step = 0;

  nlohmann::json to_json() const;
  static Problem from_json(const nlohmann::json& j, long line_no = -1);
};

struct GrowResult {
  bool accepted = false;
  std::string reason;  // rejection reason when not accepted
};

struct EmptyBankError : Error {
  using Error::Error;
};

struct SeedSpec {
  size_t n_seed = 100;
  size_t n_io = 6;
  uint64_t rng_seed = 0;
  ExecLimits limits;
};

class BankSet {
 public:
  explicit BankSet(uint64_t rng_seed = 0);

  // Populates each bank with n_seed presence-template instances over
  // uniformly sampled (image, phrase) pairs; induction seeds carry n_io
  // argument/output pairs over distinct phrases. Throws Error when no valid
  // instantiation exists.
  static BankSet seed_banks(const Dataset& dataset, std::span<const std::string> phrases,
                            const SegmenterProvider& seg, const SeedSpec& spec);

  // Appends iff the problem re-validates (abd/ded: stored output reproduced;
  // induction: every io pair reproduced) and the id is fresh. Rejection is a
  // value, not an error.
  GrowResult grow(Problem problem, const Dataset& dataset, const SegmenterProvider& seg,
                  const ExecLimits& limits);

  // k draws: uniform without replacement when the bank holds >= k problems,
  // with replacement otherwise. Deterministic under the bank RNG; the
  // two-argument overload draws from an external stream instead.
  std::vector<const Problem*> sample_references(Mode mode, size_t k);
  std::vector<const Problem*> sample_references(Mode mode, size_t k, Rng& rng) const;

  // valid_new first, topped up to target by bank sampling. Throws
  // EmptyBankError when both sources together cannot reach target.
  std::vector<const Problem*> fill_shortfall(Mode mode,
                                             std::vector<const Problem*> valid_new,
                                             size_t target, Rng& rng) const;

  // Samples one problem from the union of the abduction and deduction banks.
  const Problem* sample_program_source(Rng& rng) const;

  size_t size(Mode mode) const { return store(mode).size(); }
  size_t total_size() const;
  std::span<const Problem> all(Mode mode) const { return store(mode); }
  const Problem* find(std::string_view id) const;

  void save(const std::filesystem::path& dir) const;
  static BankSet load(const std::filesystem::path& dir);

  uint64_t rng_seed() const { return rng_seed_; }

  // Re-verifies every stored problem against the current oracle; true when
  // re-execution reproduces the stored output(s) exactly.
  bool reverify(const Problem& problem, const Dataset& dataset, const SegmenterProvider& seg,
                const ExecLimits& limits) const;

 private:
  const std::vector<Problem>& store(Mode mode) const { return stores_[size_t(mode)]; }
  std::vector<Problem>& store(Mode mode) { return stores_[size_t(mode)]; }

  std::vector<Problem> stores_[3];
  std::unordered_set<std::string> ids_;
  uint64_t rng_seed_ = 0;
  Rng rng_;
};

struct ExportResult {
  size_t exported = 0;
  size_t dropped = 0;
};

// Writes a benchmark JSONL of (image_id, question, answer, mode, program) for
// every bank problem that still re-verifies against the oracle; records whose
// oracle entries changed or vanished are dropped and counted.
ExportResult export_benchmark(const BankSet& banks, const Dataset& dataset,
                              const SegmenterProvider& seg, const ExecLimits& limits,
                              const std::filesystem::path& out_file);

}  // namespace geoprog
