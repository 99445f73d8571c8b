#include "geoprog/bank.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace geoprog {

using nlohmann::json;

json Problem::to_json() const {
  json pairs = json::array();
  for (const IoPair& p : io_pairs)
    pairs.push_back({{"a", value_to_json(p.arg)}, {"o", value_to_json(p.output)}});
  return json{{"id", id},
              {"mode", mode_tag(mode)},
              {"image_id", image_id},
              {"q", question},
              {"p", program.text()},
              {"a", value_to_json(arg)},
              {"o", value_to_json(output)},
              {"io_pairs", pairs},
              {"created_step", created_step}};
}

Problem Problem::from_json(const json& j, long line_no) {
  try {
    auto mode = mode_from_tag(j.at("mode").get<std::string>());
    if (!mode) throw SchemaError("problem: bad mode tag", line_no);
    auto compiled = ProgramSource::compile(j.at("p").get<std::string>());
    if (auto* e = std::get_if<CompileError>(&compiled))
      throw SchemaError(std::string("problem: bad program: ") + e->message, line_no);
    Problem out{j.at("id").get<std::string>(),
                *mode,
                j.at("image_id").get<std::string>(),
                j.at("q").get<std::string>(),
                std::get<ProgramSource>(compiled),
                value_from_json(j.at("a")),
                value_from_json(j.at("o")),
                {},
                j.at("created_step").get<int64_t>()};
    for (const json& jp : j.at("io_pairs"))
      out.io_pairs.push_back(IoPair{value_from_json(jp.at("a")), value_from_json(jp.at("o"))});
    return out;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("problem: ") + e.what(), line_no);
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(e.what(), line_no);
  }
}

namespace {
constexpr uint64_t kBankStream = 0xb4a6;
constexpr uint64_t kSeedStream = 0x5eed;
}  // namespace

BankSet::BankSet(uint64_t rng_seed)
    : rng_seed_(rng_seed), rng_(mix_seed({rng_seed, kBankStream})) {}

// The hand-written seed template: a segmenter call followed by a presence
// check on the returned masks.
static const char* kSeedProgram = "(exists (segment image arg))";

BankSet BankSet::seed_banks(const Dataset& dataset, std::span<const std::string> phrases,
                            const SegmenterProvider& seg, const SeedSpec& spec) {
  if (dataset.images().empty() || phrases.empty())
    throw Error("seed_banks: need at least one image and one phrase");
  auto compiled = ProgramSource::compile(kSeedProgram);
  const ProgramSource& seed_prog = std::get<ProgramSource>(compiled);

  BankSet banks(spec.rng_seed);
  Rng rng = derive_rng({spec.rng_seed, kSeedStream});
  char idbuf[64];

  for (Mode mode : kAllModes) {
    for (size_t i = 0; i < spec.n_seed; ++i) {
      const ImageRef& image =
          dataset.images()[uniform_below(rng, dataset.images().size())];
      Problem pr;
      pr.mode = mode;
      pr.image_id = image.id;
      pr.program = seed_prog;
      pr.created_step = 0;
      std::snprintf(idbuf, sizeof idbuf, "seed-%s-%04zu", mode_tag(mode), i);
      pr.id = idbuf;

      if (mode != Mode::Induction) {
        const std::string& phrase = phrases[uniform_below(rng, phrases.size())];
        pr.question = "Is there a " + phrase + "?";
        pr.arg = Value::str(phrase);
        auto result = check_problem_validity(pr.program, image, pr.arg, seg, spec.limits);
        if (auto* inv = std::get_if<Invalid>(&result))
          throw Error("seed_banks: seed template failed validation: " + inv->reason);
        pr.output = std::get<Value>(result);
      } else {
        if (phrases.size() < spec.n_io)
          throw Error("seed_banks: need at least n_io distinct phrases for induction seeds");
        // Partial Fisher-Yates draw of n_io distinct phrase indices.
        std::vector<size_t> idx(phrases.size());
        for (size_t k = 0; k < idx.size(); ++k) idx[k] = k;
        for (size_t k = 0; k < spec.n_io; ++k)
          std::swap(idx[k], idx[k + uniform_below(rng, idx.size() - k)]);
        pr.question = "Is there an object of the given type?";
        for (size_t k = 0; k < spec.n_io; ++k) {
          const Value a = Value::str(phrases[idx[k]]);
          auto result = check_problem_validity(pr.program, image, a, seg, spec.limits);
          if (auto* inv = std::get_if<Invalid>(&result))
            throw Error("seed_banks: seed template failed validation: " + inv->reason);
          pr.io_pairs.push_back(IoPair{a, std::get<Value>(result)});
        }
        pr.arg = pr.io_pairs.front().arg;
        pr.output = pr.io_pairs.front().output;
      }

      GrowResult grown = banks.grow(std::move(pr), dataset, seg, spec.limits);
      if (!grown.accepted)
        throw Error("seed_banks: seed rejected: " + grown.reason);
    }
  }
  return banks;
}

GrowResult BankSet::grow(Problem problem, const Dataset& dataset,
                         const SegmenterProvider& seg, const ExecLimits& limits) {
  if (ids_.count(problem.id)) return {false, "DuplicateId"};
  const ImageRef* image = dataset.find(problem.image_id);
  if (!image) return {false, "UnknownImage: " + problem.image_id};

  if (problem.mode == Mode::Induction) {
    if (problem.io_pairs.empty()) return {false, "BadPairCount: no io pairs"};
    for (size_t t = 0; t < problem.io_pairs.size(); ++t) {
      const IoPair& pair = problem.io_pairs[t];
      auto result = check_problem_validity(problem.program, *image, pair.arg, seg, limits);
      if (auto* inv = std::get_if<Invalid>(&result))
        return {false, "pair " + std::to_string(t) + ": " + inv->reason};
      if (!exact_equal(std::get<Value>(result), pair.output))
        return {false, "pair " + std::to_string(t) + ": OutputMismatch"};
    }
  } else {
    auto result = check_problem_validity(problem.program, *image, problem.arg, seg, limits);
    if (auto* inv = std::get_if<Invalid>(&result)) return {false, inv->reason};
    if (!exact_equal(std::get<Value>(result), problem.output))
      return {false, "OutputMismatch"};
  }

  ids_.insert(problem.id);
  store(problem.mode).push_back(std::move(problem));
  return {true, ""};
}

std::vector<const Problem*> BankSet::sample_references(Mode mode, size_t k) {
  return sample_references(mode, k, rng_);
}

std::vector<const Problem*> BankSet::sample_references(Mode mode, size_t k,
                                                       Rng& rng) const {
  const auto& items = store(mode);
  if (items.empty()) throw EmptyBankError("sample_references: bank is empty");
  std::vector<const Problem*> out;
  out.reserve(k);
  if (items.size() >= k) {
    // Uniform without replacement via partial Fisher-Yates over indices.
    std::vector<size_t> idx(items.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (size_t i = 0; i < k; ++i) {
      std::swap(idx[i], idx[i + uniform_below(rng, idx.size() - i)]);
      out.push_back(&items[idx[i]]);
    }
  } else {
    for (size_t i = 0; i < k; ++i)
      out.push_back(&items[uniform_below(rng, items.size())]);
  }
  return out;
}

std::vector<const Problem*> BankSet::fill_shortfall(Mode mode,
                                                    std::vector<const Problem*> valid_new,
                                                    size_t target, Rng& rng) const {
  if (valid_new.size() >= target) {
    valid_new.resize(target);
    return valid_new;
  }
  const size_t missing = target - valid_new.size();
  const auto& items = store(mode);
  if (items.empty())
    throw EmptyBankError("fill_shortfall: bank is empty and proposals fall short");
  auto sampled = sample_references(mode, missing, rng);
  valid_new.insert(valid_new.end(), sampled.begin(), sampled.end());
  return valid_new;
}

const Problem* BankSet::sample_program_source(Rng& rng) const {
  const auto& abd = store(Mode::Abduction);
  const auto& ded = store(Mode::Deduction);
  const size_t total = abd.size() + ded.size();
  if (total == 0) throw EmptyBankError("sample_program_source: abd and ded banks are empty");
  const size_t i = uniform_below(rng, total);
  return i < abd.size() ? &abd[i] : &ded[i - abd.size()];
}

size_t BankSet::total_size() const {
  return stores_[0].size() + stores_[1].size() + stores_[2].size();
}

const Problem* BankSet::find(std::string_view id) const {
  for (const auto& items : stores_)
    for (const Problem& p : items)
      if (p.id == id) return &p;
  return nullptr;
}

void BankSet::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (Mode mode : kAllModes) {
    const auto path = dir / (std::string(mode_tag(mode)) + ".jsonl");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write bank file: " + path.string());
    for (const Problem& p : store(mode)) out << p.to_json().dump() << "\n";
  }
  std::ostringstream state;
  state << rng_;
  json meta = {{"rng_seed", rng_seed_}, {"rng_state", state.str()}};
  std::ofstream out(dir / "bank_meta.json", std::ios::binary);
  if (!out) throw IoError("cannot write bank meta: " + (dir / "bank_meta.json").string());
  out << meta.dump(2) << "\n";
}

bool BankSet::reverify(const Problem& problem, const Dataset& dataset,
                       const SegmenterProvider& seg, const ExecLimits& limits) const {
  const ImageRef* image = dataset.find(problem.image_id);
  if (!image) return false;
  if (problem.mode == Mode::Induction) {
    if (problem.io_pairs.empty()) return false;
    for (const IoPair& pair : problem.io_pairs) {
      auto checked = check_problem_validity(problem.program, *image, pair.arg, seg, limits);
      if (std::holds_alternative<Invalid>(checked) ||
          !exact_equal(std::get<Value>(checked), pair.output))
        return false;
    }
    return true;
  }
  auto checked = check_problem_validity(problem.program, *image, problem.arg, seg, limits);
  return !std::holds_alternative<Invalid>(checked) &&
         exact_equal(std::get<Value>(checked), problem.output);
}

ExportResult export_benchmark(const BankSet& banks, const Dataset& dataset,
                              const SegmenterProvider& seg, const ExecLimits& limits,
                              const std::filesystem::path& out_file) {
  std::ofstream out(out_file, std::ios::binary);
  if (!out) throw IoError("cannot write: " + out_file.string());
  ExportResult result;
  for (Mode mode : kAllModes) {
    for (const Problem& p : banks.all(mode)) {
      if (!banks.reverify(p, dataset, seg, limits)) {
        ++result.dropped;
        continue;
      }
      json rec = {{"image_id", p.image_id},
                  {"question", p.question},
                  {"answer", value_to_json(p.output)},
                  {"mode", mode_tag(p.mode)},
                  {"program", p.program.text()}};
      out << rec.dump() << "\n";
      ++result.exported;
    }
  }
  return result;
}

BankSet BankSet::load(const std::filesystem::path& dir) {
  const auto meta_path = dir / "bank_meta.json";
  std::ifstream meta_in(meta_path);
  if (!meta_in) throw IoError("cannot open bank meta: " + meta_path.string());
  json meta = json::parse(meta_in, nullptr, false);
  if (meta.is_discarded() || !meta.contains("rng_seed") || !meta.contains("rng_state"))
    throw SchemaError("bank meta: bad content: " + meta_path.string());

  BankSet banks(meta.at("rng_seed").get<uint64_t>());
  std::istringstream state(meta.at("rng_state").get<std::string>());
  state >> banks.rng_;
  if (state.fail()) throw SchemaError("bank meta: bad rng state");

  for (Mode mode : kAllModes) {
    const auto path = dir / (std::string(mode_tag(mode)) + ".jsonl");
    std::ifstream in(path);
    if (!in) throw IoError("cannot open bank file: " + path.string());
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      json rec = json::parse(line, nullptr, false);
      if (rec.is_discarded()) throw SchemaError("bank: bad json", line_no);
      Problem p = Problem::from_json(rec, line_no);
      if (p.mode != mode) throw SchemaError("bank: mode does not match file", line_no);
      if (!banks.ids_.insert(p.id).second)
        throw SchemaError("bank: duplicate id " + p.id, line_no);
      banks.store(mode).push_back(std::move(p));
    }
  }
  return banks;
}

}  // namespace geoprog
