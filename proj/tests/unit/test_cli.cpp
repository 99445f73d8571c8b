#include <doctest.h>

#ifdef GEOPROG_BIN_PATH

#include <cstdio>
#include <fstream>

#include "geoprog/synth.hpp"
#include "support/fixtures.hpp"

using namespace geoprog;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string out;
};

CmdResult run_cmd(const std::string& args) {
  const std::string cmd = std::string(GEOPROG_BIN_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult result;
  char buf[4096];
  while (size_t n = fread(buf, 1, sizeof buf, pipe)) result.out.append(buf, n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Hand-built world on disk: "building" and "roof" both present in seed-img.
struct DiskWorld {
  fixtures::TempDir dir{"cli"};
  std::string manifest, oracle;

  DiskWorld() {
    fixtures::SeedWorld world;
    world.dataset.save_jsonl(dir.path / "manifest.jsonl");
    world.oracle->save_jsonl(dir.path / "oracle.jsonl");
    manifest = (dir.path / "manifest.jsonl").string();
    oracle = (dir.path / "oracle.jsonl").string();
  }
  std::string world_flags() const { return "--manifest " + manifest + " --oracle " + oracle; }
};

}  // namespace

TEST_CASE("cli exec: success, runtime failure, and usage errors") {
  DiskWorld world;
  const auto prog = world.dir.path / "seed.sexp";
  write_file(prog, fixtures::seed_program_text());

  auto ok = run_cmd("exec " + world.world_flags() + " " + prog.string() +
                    " seed-img '\"building\"'");
  CHECK(ok.exit_code == 0);
  CHECK(ok.out == "{\"t\":\"bool\",\"v\":true}\n");

  auto miss = run_cmd("exec " + world.world_flags() + " " + prog.string() +
                      " seed-img '\"zeppelin\"'");
  CHECK(miss.exit_code == 0);
  CHECK(miss.out == "{\"t\":\"bool\",\"v\":false}\n");

  auto unknown_image = run_cmd("exec " + world.world_flags() + " " + prog.string() +
                               " nope '\"building\"'");
  CHECK(unknown_image.exit_code == 2);

  const auto broken = world.dir.path / "broken.sexp";
  write_file(broken, "(exists (segment image arg)");
  CHECK(run_cmd("exec " + world.world_flags() + " " + broken.string() +
                " seed-img '\"building\"'")
            .exit_code == 2);

  const auto failing = world.dir.path / "failing.sexp";
  write_file(failing, "(bbox (union (segment image arg)))");
  CHECK(run_cmd("exec " + world.world_flags() + " " + failing.string() +
                " seed-img '\"zeppelin\"'")
            .exit_code == 1);
}

TEST_CASE("cli verify: mode-tagged rewards") {
  DiskWorld world;

  const auto ded_problem = world.dir.path / "ded.json";
  write_file(ded_problem,
             R"x({"id":"d1","mode":"ded","image_id":"seed-img","q":"How many?",)x"
             R"x("p":"(count (segment image arg))","a":{"t":"str","v":"building"},)x"
             R"x("o":{"t":"int","v":10},"io_pairs":[],"created_step":0})x");
  auto ded = run_cmd("verify " + world.world_flags() + " " + ded_problem.string() + " 7 ded");
  CHECK(ded.exit_code == 0);
  CHECK(ded.out == "{\"mode\":\"deduction\",\"reward\":0.7}\n");

  const auto thirds = world.dir.path / "thirds.json";
  write_file(thirds,
             R"x({"id":"d2","mode":"ded","image_id":"seed-img","q":"How many?",)x"
             R"x("p":"(count (segment image arg))","a":{"t":"str","v":"building"},)x"
             R"x("o":{"t":"int","v":3},"io_pairs":[],"created_step":0})x");
  auto two_thirds =
      run_cmd("verify " + world.world_flags() + " " + thirds.string() + " 2 ded");
  CHECK(two_thirds.exit_code == 0);
  CHECK(two_thirds.out == "{\"mode\":\"deduction\",\"reward\":0.6667}\n");

  const auto abd_problem = world.dir.path / "abd.json";
  write_file(abd_problem,
             R"x({"id":"a1","mode":"abd","image_id":"seed-img","q":"Is there a building?",)x"
             R"x("p":"(exists (segment image arg))","a":{"t":"str","v":"building"},)x"
             R"x("o":{"t":"bool","v":true},"io_pairs":[],"created_step":0})x");
  auto abd = run_cmd("verify " + world.world_flags() + " " + abd_problem.string() +
                     " '\"building\"' abd");
  CHECK(abd.exit_code == 0);
  CHECK(abd.out == "{\"mode\":\"abduction\",\"reward\":1.0}\n");

  const auto ind_problem = world.dir.path / "ind.json";
  write_file(
      ind_problem,
      R"x({"id":"i1","mode":"ind","image_id":"seed-img","q":"Is there one?",)x"
      R"x("p":"(exists (segment image arg))","a":{"t":"str","v":"building"},)x"
      R"x("o":{"t":"bool","v":true},"io_pairs":[)x"
      R"x({"a":{"t":"str","v":"building"},"o":{"t":"bool","v":true}},)x"
      R"x({"a":{"t":"str","v":"roof"},"o":{"t":"bool","v":true}},)x"
      R"x({"a":{"t":"str","v":"x1"},"o":{"t":"bool","v":false}},)x"
      R"x({"a":{"t":"str","v":"x2"},"o":{"t":"bool","v":false}},)x"
      R"x({"a":{"t":"str","v":"x3"},"o":{"t":"bool","v":false}},)x"
      R"x({"a":{"t":"str","v":"x4"},"o":{"t":"bool","v":false}}],"created_step":0})x");
  auto ind = run_cmd("verify " + world.world_flags() + " " + ind_problem.string() +
                     " '(exists (segment image arg))' ind");
  CHECK(ind.exit_code == 0);
  CHECK(ind.out == "{\"mode\":\"induction\",\"reward\":1.0}\n");
}

TEST_CASE("cli run: a killed run resumes to the same bytes") {
  fixtures::TempDir dir("cli-run");
  SynthSpec spec;
  spec.n_images = 10;
  spec.n_phrases = 8;
  spec.seed = 12;
  write_world(make_synthetic_world(spec), dir.path / "data");

  const std::string common = "run --dataset " + (dir.path / "data/manifest.jsonl").string() +
                             " --oracle " + (dir.path / "data/oracle.jsonl").string() +
                             " --policy scripted:bernoulli:0.5 --seed 5 --batch 4" +
                             " --rollouts 2 --refs 2";
  auto straight = run_cmd(common + " --steps 2 --bank-dir " + (dir.path / "a/banks").string() +
                          " --log-dir " + (dir.path / "a/logs").string());
  CHECK(straight.exit_code == 0);

  CHECK(run_cmd(common + " --steps 1 --bank-dir " + (dir.path / "b/banks").string() +
                " --log-dir " + (dir.path / "b/logs").string())
            .exit_code == 0);
  CHECK(run_cmd(common + " --steps 2 --bank-dir " + (dir.path / "b/banks").string() +
                " --log-dir " + (dir.path / "b/logs").string())
            .exit_code == 0);

  for (const char* name :
       {"banks/abd.jsonl", "banks/ded.jsonl", "banks/ind.jsonl", "logs/episodes.jsonl",
        "logs/reports.jsonl"}) {
    CHECK(slurp(dir.path / "a" / name) == slurp(dir.path / "b" / name));
    CHECK_FALSE(slurp(dir.path / "a" / name).empty());
  }
}

#ifdef POLICY_STUB_PATH
TEST_CASE("cli run attaches an external policy process") {
  fixtures::TempDir dir("cli-exec-policy");
  SynthSpec spec;
  spec.n_images = 8;
  spec.n_phrases = 8;
  spec.seed = 33;
  write_world(make_synthetic_world(spec), dir.path / "data");

  auto result = run_cmd(
      "run --dataset " + (dir.path / "data/manifest.jsonl").string() + " --oracle " +
      (dir.path / "data/oracle.jsonl").string() + " --steps 1 --batch 3 --rollouts 2" +
      " --refs 2 --seed 4 --policy 'exec:" + std::string(POLICY_STUB_PATH) + "'" +
      " --bank-dir " + (dir.path / "banks").string() + " --log-dir " +
      (dir.path / "logs").string());
  CHECK(result.exit_code == 0);
  CHECK(std::filesystem::exists(dir.path / "logs/episodes.jsonl"));
  CHECK_FALSE(slurp(dir.path / "logs/episodes.jsonl").empty());
}
#endif

TEST_CASE("cli export and analyze write their artifacts") {
  fixtures::TempDir dir("cli-export");
  SynthSpec spec;
  spec.n_images = 8;
  spec.n_phrases = 8;
  spec.seed = 21;
  write_world(make_synthetic_world(spec), dir.path / "data");
  const std::string flags = "--manifest " + (dir.path / "data/manifest.jsonl").string() +
                            " --oracle " + (dir.path / "data/oracle.jsonl").string();
  CHECK(run_cmd("run --dataset " + (dir.path / "data/manifest.jsonl").string() + " --oracle " +
                (dir.path / "data/oracle.jsonl").string() + " --steps 1 --batch 4" +
                " --rollouts 2 --refs 2 --seed 9 --policy scripted:oracle --bank-dir " +
                (dir.path / "banks").string() + " --log-dir " + (dir.path / "logs").string())
            .exit_code == 0);

  auto exported = run_cmd("export " + flags + " --bank-dir " + (dir.path / "banks").string() +
                          " " + (dir.path / "bench.jsonl").string());
  CHECK(exported.exit_code == 0);
  CHECK(exported.out.find("\"dropped\":0") != std::string::npos);

  auto analyzed = run_cmd("analyze --bank-dir " + (dir.path / "banks").string() +
                          " --out-dir " + (dir.path / "analysis").string());
  CHECK(analyzed.exit_code == 0);
  for (const char* name :
       {"analysis.json", "primitives.csv", "dimensions.csv", "cooccurrence.csv"})
    CHECK(std::filesystem::exists(dir.path / "analysis" / name));
}

#endif  // GEOPROG_BIN_PATH
