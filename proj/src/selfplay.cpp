#include "geoprog/selfplay.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <future>
#include <sstream>
#include <unordered_map>

namespace geoprog {

using nlohmann::json;

void SelfPlayConfig::check() const {
  if (B < 1 || K < 1 || R < 1 || N_io < 1 || N_seed < 1 || total_steps < 1)
    throw Error("config: all counts must be >= 1");
  if (N_io % 2 != 0) throw Error("config: N_io must be even");
  if (lambda < 0) throw Error("config: lambda must be >= 0");
  if (limits.step_budget < 1 || limits.max_maskset < 1)
    throw Error("config: limits must be positive");
  if (jobs < 1) throw Error("config: jobs must be >= 1");
}

SolverView make_solver_view(const Problem& problem, const ImageRef& image,
                            const InductionViews* views) {
  SolverView view;
  view.problem_id = problem.id;
  view.mode = problem.mode;
  view.image = image;
  switch (problem.mode) {
    case Mode::Abduction:
      view.program = problem.program.text();
      view.output = problem.output;
      break;
    case Mode::Deduction:
      view.program = problem.program.text();
      view.arg = problem.arg;
      break;
    case Mode::Induction:
      if (!views) throw Error("induction solver view needs a visible/held-out split");
      view.visible_pairs = views->visible;
      break;
  }
  return view;
}

InductionViews make_induction_views(const Problem& problem, size_t n_io, Rng& rng) {
  if (problem.io_pairs.size() != n_io || n_io % 2 != 0)
    throw Error("BadPairCount: expected " + std::to_string(n_io) + " io pairs, have " +
                std::to_string(problem.io_pairs.size()));
  std::vector<size_t> idx(n_io);
  for (size_t i = 0; i < n_io; ++i) idx[i] = i;
  for (size_t i = 0; i + 1 < n_io; ++i)
    std::swap(idx[i], idx[i + uniform_below(rng, n_io - i)]);
  InductionViews views;
  for (size_t i = 0; i < n_io / 2; ++i) views.visible.push_back(problem.io_pairs[idx[i]]);
  for (size_t i = n_io / 2; i < n_io; ++i) views.heldout.push_back(problem.io_pairs[idx[i]]);
  return views;
}

// ---------------------------------------------------------------------------
// Propose phase

namespace {

// Stream tags keep every derived RNG independent of consumption order
// elsewhere; together with the seed and step they make runs reproducible and
// resumable.
constexpr uint64_t kStreamImages = 1;
constexpr uint64_t kStreamProposePolicy = 2;
constexpr uint64_t kStreamFill = 3;
constexpr uint64_t kStreamViews = 4;
constexpr uint64_t kStreamSolvePolicy = 5;

std::string proposal_id(Mode mode, int64_t step, int b) {
  std::ostringstream os;
  os << mode_tag(mode) << "-s" << step << "-p" << b;
  return os.str();
}

// Answers and proposal fields arrive as text. Accept tagged JSON first, then
// plain JSON scalars, then a bare string.
std::optional<Value> parse_value_text(const std::string& text) {
  std::string trimmed = text;
  while (!trimmed.empty() && ascii::is_space(trimmed.front())) trimmed.erase(trimmed.begin());
  while (!trimmed.empty() && ascii::is_space(trimmed.back())) trimmed.pop_back();
  if (trimmed.empty()) return std::nullopt;
  json j = json::parse(trimmed, nullptr, false);
  if (!j.is_discarded()) {
    if (j.is_object()) {
      try {
        return value_from_json(j);
      } catch (const Error&) {
        return std::nullopt;
      }
    }
    if (j.is_boolean()) return Value::boolean(j.get<bool>());
    if (j.is_number_integer()) return Value::integer(j.get<int64_t>());
    if (j.is_number_float()) return Value::real(j.get<double>());
    if (j.is_string()) return Value::str(j.get<std::string>());
    if (j.is_array() && j.size() == 4 && std::all_of(j.begin(), j.end(), [](const json& e) {
          return e.is_number_integer();
        }))
      return Value::box(Box{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()});
    return std::nullopt;
  }
  return Value::str(trimmed);
}

struct ParsedProposal {
  std::string question;
  std::string program_text;
  Value arg;
  std::vector<Value> io_args;
};

std::optional<std::string> parse_proposal(const std::string& text, Mode mode,
                                          ParsedProposal& out) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return "Unparseable: proposal is not a JSON object";
  try {
    out.question = j.value("q", std::string());
    if (mode == Mode::Induction) {
      if (!j.contains("io_args") || !j.at("io_args").is_array())
        return "BadProposalSchema: missing io_args";
      for (const json& ja : j.at("io_args")) out.io_args.push_back(value_from_json(ja));
    } else {
      if (!j.contains("p") || !j.at("p").is_string())
        return "BadProposalSchema: missing program";
      if (!j.contains("a")) return "BadProposalSchema: missing argument";
      out.program_text = j.at("p").get<std::string>();
      out.arg = value_from_json(j.at("a"));
    }
  } catch (const Error& e) {
    return std::string("BadProposalSchema: ") + e.what();
  } catch (const json::exception& e) {
    return std::string("BadProposalSchema: ") + e.what();
  }
  return std::nullopt;
}

}  // namespace

ProposePhaseResult propose_phase(Mode mode, Policy& policy, BankSet& banks,
                                 const Dataset& dataset, const SegmenterProvider& seg,
                                 const SelfPlayConfig& cfg, int64_t step) {
  ProposePhaseResult result;
  Rng sample_rng = derive_rng({cfg.rng_seed, kStreamImages, uint64_t(step), uint64_t(mode)});

  for (int b = 0; b < cfg.B; ++b) {
    const std::string id = proposal_id(mode, step, b);
    Rng policy_rng = derive_rng(
        {cfg.rng_seed, kStreamProposePolicy, uint64_t(step), uint64_t(mode), uint64_t(b)});
    auto reject = [&](std::string reason) {
      result.attempts.push_back({id, false, std::move(reason)});
    };

    ProposalRequest request;
    request.mode = mode;
    const Problem* source = nullptr;
    if (mode == Mode::Induction) {
      source = banks.sample_program_source(sample_rng);
      const ImageRef* img = dataset.find(source->image_id);
      if (!img) {
        reject("UnknownImage: " + source->image_id);
        continue;
      }
      request.image = *img;
      request.program = source->program.text();
      request.n_io = size_t(cfg.N_io);
    } else {
      request.image = dataset.images()[uniform_below(sample_rng, dataset.images().size())];
    }
    request.references = banks.sample_references(mode, size_t(cfg.K));

    auto text = policy.propose(request, policy_rng);
    if (!text) {
      reject("PolicyFailure: no proposal text");
      continue;
    }
    ParsedProposal parsed;
    if (auto err = parse_proposal(*text, mode, parsed)) {
      reject(*err);
      continue;
    }

    Problem problem;
    problem.id = id;
    problem.mode = mode;
    problem.image_id = request.image.id;
    problem.question = parsed.question;
    problem.created_step = step;

    if (mode == Mode::Induction) {
      problem.program = source->program;
      if (parsed.io_args.size() != size_t(cfg.N_io)) {
        reject("BadPairCount: expected " + std::to_string(cfg.N_io) + " io args, got " +
               std::to_string(parsed.io_args.size()));
        continue;
      }
      bool bad = false;
      for (size_t t = 0; t < parsed.io_args.size() && !bad; ++t) {
        auto checked = check_problem_validity(problem.program, request.image,
                                              parsed.io_args[t], seg, cfg.limits);
        if (auto* inv = std::get_if<Invalid>(&checked)) {
          reject("pair " + std::to_string(t) + ": " + inv->reason);
          bad = true;
          break;
        }
        problem.io_pairs.push_back(IoPair{parsed.io_args[t], std::get<Value>(checked)});
      }
      if (bad) continue;
      problem.arg = problem.io_pairs.front().arg;
      problem.output = problem.io_pairs.front().output;
    } else {
      auto compiled = ProgramSource::compile(parsed.program_text);
      if (auto* e = std::get_if<CompileError>(&compiled)) {
        reject(std::string(e->code_name()) + ": " + e->message);
        continue;
      }
      problem.program = std::get<ProgramSource>(compiled);
      problem.arg = parsed.arg;
      auto checked =
          check_problem_validity(problem.program, request.image, problem.arg, seg, cfg.limits);
      if (auto* inv = std::get_if<Invalid>(&checked)) {
        reject(inv->reason);
        continue;
      }
      problem.output = std::get<Value>(checked);
    }

    GrowResult grown = banks.grow(std::move(problem), dataset, seg, cfg.limits);
    if (!grown.accepted) {
      reject(grown.reason);
      continue;
    }
    result.attempts.push_back({id, true, ""});
    result.accepted_ids.push_back(id);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Solve phase

namespace {

double score_answer(const Problem& problem, const InductionViews* views,
                    const std::string& answer, const Dataset& dataset,
                    const SegmenterProvider& seg, const ExecLimits& limits) {
  const ImageRef* image = dataset.find(problem.image_id);
  if (!image) return 0.0;
  switch (problem.mode) {
    case Mode::Abduction: {
      auto value = parse_value_text(answer);
      if (!value) return 0.0;
      return reward_abduction(problem.program, *image, problem.output, *value, seg, limits);
    }
    case Mode::Deduction: {
      auto value = parse_value_text(answer);
      if (!value) return 0.0;
      return reward_deduction(*value, problem.output);
    }
    case Mode::Induction:
      return reward_induction(answer, *views, *image, seg, limits);
  }
  return 0.0;
}

}  // namespace

std::vector<RewardRecord> solve_phase(Mode mode, Policy& policy,
                                      std::span<const Problem* const> batch,
                                      const std::vector<std::string>& proposal_ids,
                                      const Dataset& dataset, const SegmenterProvider& seg,
                                      const SelfPlayConfig& cfg, int64_t step) {
  std::vector<RewardRecord> records(batch.size());

  auto run_one = [&](size_t idx) {
    const Problem& problem = *batch[idx];
    RewardRecord& rec = records[idx];
    rec.problem_id = problem.id;
    rec.key = TaskKey{Role::Solver, mode};
    rec.is_proposal =
        std::find(proposal_ids.begin(), proposal_ids.end(), problem.id) != proposal_ids.end();

    InductionViews views;
    const InductionViews* views_ptr = nullptr;
    if (mode == Mode::Induction) {
      Rng view_rng = derive_rng(
          {cfg.rng_seed, kStreamViews, uint64_t(step), uint64_t(mode), uint64_t(idx)});
      views = make_induction_views(problem, size_t(cfg.N_io), view_rng);
      views_ptr = &views;
    }
    const ImageRef* image = dataset.find(problem.image_id);
    if (!image) throw Error("solve: unknown image " + problem.image_id);
    const SolverView view = make_solver_view(problem, *image, views_ptr);

    rec.rollout_rewards.reserve(size_t(cfg.R));
    for (int r = 0; r < cfg.R; ++r) {
      Rng rollout_rng = derive_rng({cfg.rng_seed, kStreamSolvePolicy, uint64_t(step),
                                    uint64_t(mode), uint64_t(idx), uint64_t(r)});
      auto answer = policy.solve(view, rollout_rng);
      const double reward =
          answer ? score_answer(problem, views_ptr, *answer, dataset, seg, cfg.limits) : 0.0;
      rec.rollout_rewards.push_back(reward);
    }
    double sum = 0;
    for (double r : rec.rollout_rewards) sum += r;
    rec.mean_reward = sum / double(rec.rollout_rewards.size());
    if (rec.is_proposal) rec.prop_reward = proposer_reward(rec.rollout_rewards);
  };

  const int workers = policy.reentrant() ? cfg.jobs : 1;
  if (workers <= 1 || batch.size() <= 1) {
    for (size_t i = 0; i < batch.size(); ++i) run_one(i);
  } else {
    std::atomic<size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= batch.size()) return;
        run_one(i);
      }
    };
    std::vector<std::future<void>> futs;
    for (int w = 0; w < workers; ++w) futs.push_back(std::async(std::launch::async, worker));
    for (auto& f : futs) f.get();
  }
  return records;
}

// ---------------------------------------------------------------------------
// Step driver

json EpisodeLogEntry::to_json() const {
  return json{{"step", step},
              {"role", role_tag(role)},
              {"mode", mode_tag(mode)},
              {"problem_id", problem_id},
              {"rollout", rollout},
              {"reward", reward},
              {"advantage", advantage},
              {"rejection", rejection.empty() ? json() : json(rejection)}};
}

json StepReport::to_json() const {
  json groups = json::object();
  for (Role role : {Role::Proposer, Role::Solver})
    for (Mode mode : kAllModes)
      groups[std::string(role_tag(role)) + "_" + mode_tag(mode)] =
          group_mean[size_t(role)][size_t(mode)];
  return json{{"step", step},
              {"bank_sizes",
               {{"abd", bank_sizes[0]}, {"ded", bank_sizes[1]}, {"ind", bank_sizes[2]}}},
              {"accepted", {{"abd", accepted[0]}, {"ded", accepted[1]}, {"ind", accepted[2]}}},
              {"rejected", {{"abd", rejected[0]}, {"ded", rejected[1]}, {"ind", rejected[2]}}},
              {"group_means", groups},
              {"proposer_mean", proposer_mean},
              {"solver_mean", solver_mean},
              {"joint_objective", joint_objective}};
}

StepReport run_step(Policy& policy, BankSet& banks, const Dataset& dataset,
                    const SegmenterProvider& seg, const SelfPlayConfig& cfg, int64_t step,
                    std::vector<EpisodeLogEntry>& log_out) {
  cfg.check();
  StepReport report;
  report.step = step;

  ProposePhaseResult proposals[3];
  for (Mode mode : kAllModes)
    proposals[size_t(mode)] = propose_phase(mode, policy, banks, dataset, seg, cfg, step);

  std::vector<RewardRecord> records[3];
  for (Mode mode : kAllModes) {
    const auto& accepted = proposals[size_t(mode)].accepted_ids;
    std::vector<const Problem*> fresh;
    for (const std::string& id : accepted) fresh.push_back(banks.find(id));
    Rng fill_rng =
        derive_rng({cfg.rng_seed, kStreamFill, uint64_t(step), uint64_t(mode)});
    auto batch = banks.fill_shortfall(mode, std::move(fresh), size_t(cfg.B), fill_rng);
    records[size_t(mode)] =
        solve_phase(mode, policy, batch, accepted, dataset, seg, cfg, step);
  }

  // Task-relative advantages over all six (role, mode) groups of this step.
  std::vector<AdvantageItem> items;
  for (Mode mode : kAllModes)
    for (const RewardRecord& rec : records[size_t(mode)])
      items.push_back({rec.key, rec.mean_reward, 0});
  // Proposer stream: one item per proposal attempt; rejected attempts score 0.
  std::unordered_map<std::string, const RewardRecord*> by_id;
  for (Mode mode : kAllModes)
    for (const RewardRecord& rec : records[size_t(mode)])
      by_id.emplace(rec.problem_id, &rec);
  for (Mode mode : kAllModes) {
    for (const ProposalOutcome& attempt : proposals[size_t(mode)].attempts) {
      double reward = 0;
      if (attempt.accepted) {
        auto it = by_id.find(attempt.id);
        if (it != by_id.end() && it->second->prop_reward) reward = *it->second->prop_reward;
      }
      items.push_back({TaskKey{Role::Proposer, mode}, reward, 0});
    }
  }
  task_relative_advantages(items);

  // Write advantages back and assemble the episode log: proposer entries
  // first (attempt order), then solver rollouts (batch order).
  size_t item_idx = 0;
  for (Mode mode : kAllModes)
    for (RewardRecord& rec : records[size_t(mode)]) rec.advantage = items[item_idx++].advantage;

  double role_sum[2] = {0, 0};
  size_t role_n[2] = {0, 0};
  double group_sum[2][3] = {};
  size_t group_n[2][3] = {};

  std::vector<EpisodeLogEntry> entries;
  for (Mode mode : kAllModes) {
    for (const ProposalOutcome& attempt : proposals[size_t(mode)].attempts) {
      const AdvantageItem& item = items[item_idx];
      EpisodeLogEntry e;
      e.step = step;
      e.role = Role::Proposer;
      e.mode = mode;
      e.problem_id = attempt.id;
      e.rollout = -1;
      e.reward = item.reward;
      e.advantage = item.advantage;
      e.rejection = attempt.reason;
      entries.push_back(std::move(e));
      group_sum[0][size_t(mode)] += item.reward;
      group_n[0][size_t(mode)] += 1;
      role_sum[0] += item.reward;
      role_n[0] += 1;
      ++item_idx;
    }
  }
  for (Mode mode : kAllModes) {
    for (const RewardRecord& rec : records[size_t(mode)]) {
      for (size_t r = 0; r < rec.rollout_rewards.size(); ++r) {
        EpisodeLogEntry e;
        e.step = step;
        e.role = Role::Solver;
        e.mode = mode;
        e.problem_id = rec.problem_id;
        e.rollout = int(r);
        e.reward = rec.rollout_rewards[r];
        e.advantage = rec.advantage;
        entries.push_back(std::move(e));
      }
      group_sum[1][size_t(mode)] += rec.mean_reward;
      group_n[1][size_t(mode)] += 1;
      role_sum[1] += rec.mean_reward;
      role_n[1] += 1;
    }
  }

  for (Mode mode : kAllModes) {
    report.bank_sizes[size_t(mode)] = banks.size(mode);
    report.accepted[size_t(mode)] = proposals[size_t(mode)].accepted_ids.size();
    report.rejected[size_t(mode)] = proposals[size_t(mode)].rejected_count();
    for (int role = 0; role < 2; ++role)
      report.group_mean[role][size_t(mode)] =
          group_n[role][size_t(mode)] ? group_sum[role][size_t(mode)] / double(group_n[role][size_t(mode)])
                                      : 0.0;
  }
  report.proposer_mean = role_n[0] ? role_sum[0] / double(role_n[0]) : 0.0;
  report.solver_mean = role_n[1] ? role_sum[1] / double(role_n[1]) : 0.0;
  report.joint_objective =
      joint_step_objective(report.proposer_mean, report.solver_mean, cfg.lambda);

  log_out.insert(log_out.end(), entries.begin(), entries.end());
  return report;
}

// ---------------------------------------------------------------------------
// Run driver with persistence and resume

namespace {

void truncate_jsonl(const std::filesystem::path& path, int64_t keep_lines) {
  if (!std::filesystem::exists(path)) return;
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line) && int64_t(lines.size()) < keep_lines)
    lines.push_back(line);
  in.close();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  for (const std::string& l : lines) out << l << "\n";
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write: " + tmp);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

RunResult run_selfplay(Policy& policy, BankSet& banks, const Dataset& dataset,
                       const SegmenterProvider& seg, const SelfPlayConfig& cfg,
                       const RunPaths& paths) {
  cfg.check();
  std::filesystem::create_directories(paths.log_dir);
  std::filesystem::create_directories(paths.bank_dir);

  const auto state_path = paths.log_dir / "state.json";
  const auto episodes_path = paths.log_dir / "episodes.jsonl";
  const auto reports_path = paths.log_dir / "reports.jsonl";

  int64_t next_step = 0;
  int64_t episode_lines = 0;
  int64_t report_lines = 0;
  if (std::filesystem::exists(state_path)) {
    std::ifstream in(state_path);
    json st = json::parse(in, nullptr, false);
    if (st.is_discarded()) throw SchemaError("state.json is corrupt");
    if (st.at("rng_seed").get<uint64_t>() != cfg.rng_seed)
      throw Error("resume: rng_seed differs from the persisted run");
    next_step = st.at("next_step").get<int64_t>();
    episode_lines = st.at("episode_lines").get<int64_t>();
    report_lines = st.at("report_lines").get<int64_t>();
    // Drop any partially-written step beyond the last persisted state.
    truncate_jsonl(episodes_path, episode_lines);
    truncate_jsonl(reports_path, report_lines);
  }

  RunResult result;
  result.first_step = next_step;
  for (int64_t step = next_step; step < cfg.total_steps; ++step) {
    std::vector<EpisodeLogEntry> entries;
    StepReport report = run_step(policy, banks, dataset, seg, cfg, step, entries);

    {
      std::ofstream out(episodes_path, std::ios::binary | std::ios::app);
      if (!out) throw IoError("cannot append episode log");
      for (const EpisodeLogEntry& e : entries) out << e.to_json().dump() << "\n";
    }
    episode_lines += int64_t(entries.size());
    {
      std::ofstream out(reports_path, std::ios::binary | std::ios::app);
      if (!out) throw IoError("cannot append step reports");
      out << report.to_json().dump() << "\n";
    }
    report_lines += 1;

    banks.save(paths.bank_dir);
    json st = {{"next_step", step + 1},
               {"episode_lines", episode_lines},
               {"report_lines", report_lines},
               {"rng_seed", cfg.rng_seed}};
    atomic_write(state_path, st.dump(2) + "\n");

    result.reports.push_back(report);
    result.steps_executed += 1;
  }
  return result;
}

}  // namespace geoprog
