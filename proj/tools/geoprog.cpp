// geoprog: operator CLI for the self-play environment.
//
// Subcommands: exec, verify, run, export, analyze, fixtures.
// Exit codes: 0 success, 1 verification-negative, 2 usage/schema error,
// 3 I/O error.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#include "geoprog/analysis.hpp"
#include "geoprog/policies.hpp"
#include "geoprog/selfplay.hpp"
#include "geoprog/subprocess.hpp"
#include "geoprog/synth.hpp"

namespace gp = geoprog;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNegative = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw gp::IoError("cannot open: " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

gp::Value parse_value_literal(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (!j.is_discarded()) {
    if (j.is_object()) return gp::value_from_json(j);
    if (j.is_boolean()) return gp::Value::boolean(j.get<bool>());
    if (j.is_number_integer()) return gp::Value::integer(j.get<int64_t>());
    if (j.is_number_float()) return gp::Value::real(j.get<double>());
    if (j.is_string()) return gp::Value::str(j.get<std::string>());
  }
  return gp::Value::str(text);  // bare word
}

struct WorldArgs {
  std::string manifest;
  std::string oracle;
};

struct LoadedWorld {
  gp::Dataset dataset;
  std::unique_ptr<gp::OracleIndex> oracle;
};

LoadedWorld load_world(const WorldArgs& args) {
  LoadedWorld world;
  world.dataset = gp::Dataset::load_jsonl(args.manifest);
  world.oracle = std::make_unique<gp::OracleIndex>(
      gp::OracleIndex::load_jsonl(args.oracle, world.dataset));
  return world;
}

// ---------------------------------------------------------------------------

int cmd_exec(const WorldArgs& world_args, const std::string& program_file,
             const std::string& image_id, const std::string& arg_literal,
             const gp::ExecLimits& limits) {
  const LoadedWorld world = load_world(world_args);
  const gp::ImageRef* image = world.dataset.find(image_id);
  if (!image) {
    std::cerr << "UnknownImage: " << image_id << "\n";
    return kExitUsage;
  }
  auto compiled = gp::ProgramSource::compile(read_file(program_file));
  if (auto* e = std::get_if<gp::CompileError>(&compiled)) {
    std::cerr << e->code_name() << " at offset " << e->pos << ": " << e->message << "\n";
    return kExitUsage;
  }
  const gp::Value arg = parse_value_literal(arg_literal);
  const gp::ExecOutcome out =
      gp::evaluate(std::get<gp::ProgramSource>(compiled), *image, arg, *world.oracle, limits);
  if (!out.ok()) {
    std::cerr << out.to_json().dump() << "\n";
    return kExitNegative;
  }
  std::cout << gp::value_to_json(out.value()).dump() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_verify(const WorldArgs& world_args, const std::string& problem_file,
               const std::string& answer_literal, const std::string& mode_tag_str,
               const gp::ExecLimits& limits) {
  const LoadedWorld world = load_world(world_args);
  json rec = json::parse(read_file(problem_file), nullptr, false);
  if (rec.is_discarded()) throw gp::SchemaError("problem file is not JSON");
  const gp::Problem problem = gp::Problem::from_json(rec);
  const auto mode = gp::mode_from_tag(mode_tag_str);
  if (!mode) throw gp::SchemaError("mode must be abd|ded|ind");
  const gp::ImageRef* image = world.dataset.find(problem.image_id);
  if (!image) throw gp::SchemaError("UnknownImage: " + problem.image_id);

  double reward = 0;
  switch (*mode) {
    case gp::Mode::Abduction:
      reward = gp::reward_abduction(problem.program, *image, problem.output,
                                    parse_value_literal(answer_literal), *world.oracle, limits);
      break;
    case gp::Mode::Deduction:
      reward = gp::reward_deduction(parse_value_literal(answer_literal), problem.output);
      break;
    case gp::Mode::Induction: {
      // No run RNG here: the visible/held-out split derives from the problem
      // id, so repeated verifications agree.
      gp::Rng rng = gp::derive_rng({0x76e7, std::hash<std::string>{}(problem.id)});
      const auto views =
          gp::make_induction_views(problem, problem.io_pairs.size(), rng);
      const std::string program_text =
          answer_literal.size() < 256 && std::filesystem::exists(answer_literal)
              ? read_file(answer_literal)
              : answer_literal;
      reward = gp::reward_induction(program_text, views, *image, *world.oracle, limits);
      break;
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", reward);
  json out = {{"mode", gp::mode_name(*mode)}, {"reward", json::parse(buf)}};
  std::cout << out.dump() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct RunArgs {
  std::string manifest_file;  // run manifest (JSON)
  std::string dataset_manifest;
  std::string oracle;
  std::string bank_dir;
  std::string log_dir;
  std::string policy;
  int steps = -1;
  int64_t seed = -1;
  int jobs = 0;
  int b = 0, k = 0, r = 0;
};

int cmd_run(const RunArgs& args) {
  gp::SelfPlayConfig cfg;
  WorldArgs world_args;
  std::string bank_dir = "banks";
  std::string log_dir = "logs";
  std::string policy_spec = "scripted:bernoulli:0.5";

  if (!args.manifest_file.empty()) {
    json m = json::parse(read_file(args.manifest_file), nullptr, false);
    if (m.is_discarded()) throw gp::SchemaError("run manifest is not JSON");
    world_args.manifest = m.value("dataset_manifest", "");
    world_args.oracle = m.value("oracle_index", "");
    bank_dir = m.value("bank_dir", bank_dir);
    log_dir = m.value("log_dir", log_dir);
    policy_spec = m.value("policy", policy_spec);
    if (m.contains("config")) {
      const json& c = m.at("config");
      cfg.B = c.value("B", cfg.B);
      cfg.K = c.value("K", cfg.K);
      cfg.R = c.value("R", cfg.R);
      cfg.N_io = c.value("N_io", cfg.N_io);
      cfg.N_seed = c.value("N_seed", cfg.N_seed);
      cfg.lambda = c.value("lambda", cfg.lambda);
      cfg.total_steps = c.value("total_steps", cfg.total_steps);
      cfg.rng_seed = c.value("rng_seed", cfg.rng_seed);
      cfg.limits.step_budget = c.value("step_budget", cfg.limits.step_budget);
      cfg.limits.max_maskset = c.value("max_maskset", cfg.limits.max_maskset);
      cfg.policy_timeout_s = c.value("policy_timeout_s", cfg.policy_timeout_s);
      cfg.jobs = c.value("jobs", cfg.jobs);
    }
  }
  // Flag overrides.
  if (!args.dataset_manifest.empty()) world_args.manifest = args.dataset_manifest;
  if (!args.oracle.empty()) world_args.oracle = args.oracle;
  if (!args.bank_dir.empty()) bank_dir = args.bank_dir;
  if (!args.log_dir.empty()) log_dir = args.log_dir;
  if (!args.policy.empty()) policy_spec = args.policy;
  if (args.steps >= 0) cfg.total_steps = args.steps;
  if (args.seed >= 0) cfg.rng_seed = uint64_t(args.seed);
  if (args.jobs > 0) cfg.jobs = args.jobs;
  if (args.b > 0) cfg.B = args.b;
  if (args.k > 0) cfg.K = args.k;
  if (args.r > 0) cfg.R = args.r;
  cfg.check();
  if (world_args.manifest.empty() || world_args.oracle.empty())
    throw gp::SchemaError("run requires a dataset manifest and an oracle index");

  const LoadedWorld world = load_world(world_args);

  // Phrase pool for seeding and scripted proposals: every phrase the oracle
  // could answer plus whatever the manifest carries.
  std::vector<std::string> phrases;
  {
    std::ifstream in(world_args.oracle);
    std::string line;
    std::set<std::string> uniq;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json rec = json::parse(line, nullptr, false);
      if (!rec.is_discarded() && rec.contains("phrase"))
        uniq.insert(rec.at("phrase").get<std::string>());
    }
    phrases.assign(uniq.begin(), uniq.end());
  }
  if (phrases.empty()) throw gp::SchemaError("oracle index holds no phrases");

  gp::BankSet banks = std::filesystem::exists(std::filesystem::path(bank_dir) / "bank_meta.json")
                          ? gp::BankSet::load(bank_dir)
                          : gp::BankSet::seed_banks(
                                world.dataset, phrases, *world.oracle,
                                gp::SeedSpec{size_t(cfg.N_seed), size_t(cfg.N_io),
                                             cfg.rng_seed, cfg.limits});

  std::unique_ptr<gp::Policy> policy;
  const std::string scripted_prefix = "scripted:";
  const std::string exec_prefix = "exec:";
  if (policy_spec.rfind(scripted_prefix, 0) == 0) {
    gp::ScriptedEnv env{&world.dataset, world.oracle.get(), &banks, phrases, cfg.limits};
    policy = gp::make_scripted_policy(policy_spec.substr(scripted_prefix.size()), env);
  } else if (policy_spec.rfind(exec_prefix, 0) == 0) {
    policy = std::make_unique<gp::ExternalPolicy>(policy_spec.substr(exec_prefix.size()),
                                                  cfg.policy_timeout_s);
  } else {
    throw gp::SchemaError("policy must be scripted:<name> or exec:<command>");
  }

  const gp::RunResult result = gp::run_selfplay(*policy, banks, world.dataset, *world.oracle,
                                                cfg, gp::RunPaths{bank_dir, log_dir});
  json summary = {{"steps_executed", result.steps_executed},
                  {"first_step", result.first_step},
                  {"bank_dir", bank_dir},
                  {"log_dir", log_dir}};
  if (!result.reports.empty())
    summary["last_report"] = result.reports.back().to_json();
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

std::vector<gp::Problem> load_bank_problems(const std::string& bank_dir) {
  gp::BankSet banks = gp::BankSet::load(bank_dir);
  std::vector<gp::Problem> out;
  for (gp::Mode mode : gp::kAllModes)
    for (const gp::Problem& p : banks.all(mode)) out.push_back(p);
  return out;
}

int cmd_export(const WorldArgs& world_args, const std::string& bank_dir,
               const std::string& out_file, const gp::ExecLimits& limits) {
  const LoadedWorld world = load_world(world_args);
  const gp::BankSet banks = gp::BankSet::load(bank_dir);
  const gp::ExportResult result =
      gp::export_benchmark(banks, world.dataset, *world.oracle, limits, out_file);
  json summary = {{"exported", result.exported}, {"dropped", result.dropped}};
  std::cout << summary.dump() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_analyze(const std::string& bank_dir, const std::string& benchmark_file,
                const std::string& out_dir, const std::string& vocab_dir) {
  const gp::Vocab vocab =
      vocab_dir.empty() ? gp::Vocab::builtin() : gp::Vocab::load_dir(vocab_dir);
  std::vector<gp::Problem> problems;
  if (!bank_dir.empty()) {
    problems = load_bank_problems(bank_dir);
  } else {
    std::ifstream in(benchmark_file);
    if (!in) throw gp::IoError("cannot open: " + benchmark_file);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      json rec = json::parse(line, nullptr, false);
      if (rec.is_discarded()) throw gp::SchemaError("benchmark: bad json", line_no);
      gp::Problem p;
      auto compiled = gp::ProgramSource::compile(rec.at("program").get<std::string>());
      if (auto* e = std::get_if<gp::CompileError>(&compiled))
        throw gp::SchemaError(std::string("benchmark: ") + e->message, line_no);
      p.program = std::get<gp::ProgramSource>(compiled);
      p.question = rec.value("question", "");
      p.image_id = rec.value("image_id", "");
      auto mode = gp::mode_from_tag(rec.value("mode", "ded"));
      p.mode = mode.value_or(gp::Mode::Deduction);
      problems.push_back(std::move(p));
    }
  }
  const gp::UsageReport report = gp::corpus_stats(problems, vocab);
  std::filesystem::create_directories(out_dir);
  auto write = [&](const char* name, const std::string& content) {
    std::ofstream out(std::filesystem::path(out_dir) / name, std::ios::binary);
    if (!out) throw gp::IoError(std::string("cannot write ") + name);
    out << content;
  };
  write("analysis.json", report.to_json().dump(2) + "\n");
  write("primitives.csv", report.primitives_csv());
  write("dimensions.csv", report.dimensions_csv());
  write("cooccurrence.csv", report.cooccurrence_csv());
  std::cout << report.to_json().dump() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_fixtures(const std::string& out_dir, size_t images, size_t phrases, uint64_t seed,
                 int width, int height) {
  gp::SynthSpec spec;
  spec.n_images = images;
  spec.n_phrases = phrases;
  spec.seed = seed;
  spec.width = width;
  spec.height = height;
  const gp::SynthWorld world = gp::make_synthetic_world(spec);
  gp::write_world(world, out_dir);
  json summary = {{"out_dir", out_dir},
                  {"images", world.dataset->images().size()},
                  {"phrases", world.phrases},
                  {"oracle_entries", world.oracle->entry_count()}};
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geoprog: verifiable self-play environment for geospatial reasoning"};
  app.require_subcommand(1);

  WorldArgs world_args;
  gp::ExecLimits limits;

  // exec
  auto* exec_cmd = app.add_subcommand("exec", "Execute a program on an image");
  std::string program_file, image_id, arg_literal;
  exec_cmd->add_option("--manifest", world_args.manifest, "Dataset manifest JSONL")->required();
  exec_cmd->add_option("--oracle", world_args.oracle, "Oracle index JSONL")->required();
  exec_cmd->add_option("program", program_file, "Program file (s-expression)")->required();
  exec_cmd->add_option("image", image_id, "Image id")->required();
  exec_cmd->add_option("arg", arg_literal, "Argument literal (tagged JSON or bare)")->required();
  exec_cmd->add_option("--step-budget", limits.step_budget, "Evaluation step budget");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "Score an answer against a problem record");
  std::string problem_file, answer_literal, mode_str;
  verify_cmd->add_option("--manifest", world_args.manifest, "Dataset manifest JSONL")->required();
  verify_cmd->add_option("--oracle", world_args.oracle, "Oracle index JSONL")->required();
  verify_cmd->add_option("problem", problem_file, "Problem record (JSON)")->required();
  verify_cmd->add_option("answer", answer_literal, "Answer literal, or program file for induction")
      ->required();
  verify_cmd->add_option("mode", mode_str, "abd|ded|ind")->required();

  // run
  auto* run_cmd = app.add_subcommand("run", "Run self-play steps");
  RunArgs run_args;
  run_cmd->add_option("--manifest", run_args.manifest_file, "Run manifest (JSON)");
  run_cmd->add_option("--dataset", run_args.dataset_manifest, "Dataset manifest JSONL");
  run_cmd->add_option("--oracle", run_args.oracle, "Oracle index JSONL");
  run_cmd->add_option("--bank-dir", run_args.bank_dir, "Bank directory");
  run_cmd->add_option("--log-dir", run_args.log_dir, "Log directory");
  run_cmd->add_option("--policy", run_args.policy, "scripted:<name> or exec:<command>");
  run_cmd->add_option("--steps", run_args.steps, "Total steps");
  run_cmd->add_option("--seed", run_args.seed, "RNG seed");
  run_cmd->add_option("--jobs", run_args.jobs, "Concurrent evaluation cap");
  run_cmd->add_option("--batch", run_args.b, "Proposals per mode (B)");
  run_cmd->add_option("--refs", run_args.k, "In-context references (K)");
  run_cmd->add_option("--rollouts", run_args.r, "Solver rollouts (R)");

  // export
  auto* export_cmd = app.add_subcommand("export", "Export a re-verified benchmark file");
  std::string bank_dir, out_file;
  export_cmd->add_option("--manifest", world_args.manifest, "Dataset manifest JSONL")->required();
  export_cmd->add_option("--oracle", world_args.oracle, "Oracle index JSONL")->required();
  export_cmd->add_option("--bank-dir", bank_dir, "Bank directory")->required();
  export_cmd->add_option("out", out_file, "Output benchmark JSONL")->required();

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "Taxonomy and usage statistics");
  std::string an_bank_dir, an_benchmark, an_out = "analysis", vocab_dir;
  analyze_cmd->add_option("--bank-dir", an_bank_dir, "Bank directory");
  analyze_cmd->add_option("--benchmark", an_benchmark, "Benchmark JSONL (alternative input)");
  analyze_cmd->add_option("--out-dir", an_out, "Report output directory");
  analyze_cmd->add_option("--vocab-dir", vocab_dir, "Vocabulary directory");

  // fixtures
  auto* fixtures_cmd = app.add_subcommand("fixtures", "Generate a synthetic fixture dataset");
  std::string fx_out = "fixtures";
  size_t fx_images = 24, fx_phrases = 12;
  uint64_t fx_seed = 7;
  int fx_w = 64, fx_h = 64;
  fixtures_cmd->add_option("--out-dir", fx_out, "Output directory");
  fixtures_cmd->add_option("--images", fx_images, "Image count");
  fixtures_cmd->add_option("--phrases", fx_phrases, "Phrase count");
  fixtures_cmd->add_option("--seed", fx_seed, "Generator seed");
  fixtures_cmd->add_option("--width", fx_w, "Image width");
  fixtures_cmd->add_option("--height", fx_h, "Image height");

  CLI11_PARSE(app, argc, argv);

  try {
    if (exec_cmd->parsed())
      return cmd_exec(world_args, program_file, image_id, arg_literal, limits);
    if (verify_cmd->parsed())
      return cmd_verify(world_args, problem_file, answer_literal, mode_str, limits);
    if (run_cmd->parsed()) return cmd_run(run_args);
    if (export_cmd->parsed()) return cmd_export(world_args, bank_dir, out_file, limits);
    if (analyze_cmd->parsed()) return cmd_analyze(an_bank_dir, an_benchmark, an_out, vocab_dir);
    if (fixtures_cmd->parsed())
      return cmd_fixtures(fx_out, fx_images, fx_phrases, fx_seed, fx_w, fx_h);
  } catch (const gp::SchemaError& e) {
    std::cerr << "SchemaError: " << e.what() << "\n";
    return kExitUsage;
  } catch (const gp::UnknownImageError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const gp::IoError& e) {
    std::cerr << "IoError: " << e.what() << "\n";
    return kExitIo;
  } catch (const gp::Error& e) {
    std::cerr << "Error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
