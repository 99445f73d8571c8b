#include "geoprog/synth.hpp"

#include <algorithm>

#include "geoprog/rng.hpp"

namespace geoprog {

namespace {

const char* kPhrasePool[] = {
    "building", "road",         "water",     "ship",       "vehicle",
    "tree",     "storage tank", "cargo ship", "vegetation", "parking lot",
    "roundabout", "forest",     "bridge",    "swimming pool", "harbor",
    "grass",    "cropland",     "airplane",  "tennis court",  "intersection",
};

Mask rect_mask(int w, int h, int x0, int y0, int rw, int rh) {
  Mask m(w, h);
  for (int y = y0; y < std::min(h, y0 + rh); ++y)
    for (int x = x0; x < std::min(w, x0 + rw); ++x) m.set(x, y);
  return m;
}

}  // namespace

SynthWorld make_synthetic_world(const SynthSpec& spec) {
  SynthWorld world;
  world.dataset = std::make_unique<Dataset>();
  for (size_t p = 0; p < spec.n_phrases; ++p) {
    std::string phrase = kPhrasePool[p % std::size(kPhrasePool)];
    if (p >= std::size(kPhrasePool)) phrase += " " + std::to_string(p / std::size(kPhrasePool));
    world.phrases.push_back(std::move(phrase));
  }

  Rng rng = derive_rng({spec.seed, 0x57a71c});
  char idbuf[32];
  for (size_t i = 0; i < spec.n_images; ++i) {
    std::snprintf(idbuf, sizeof idbuf, "img-%03zu", i);
    world.dataset->add(ImageRef{idbuf, spec.width, spec.height});
  }
  world.oracle = std::make_unique<OracleIndex>(*world.dataset);

  for (const ImageRef& image : world.dataset->images()) {
    for (const std::string& phrase : world.phrases) {
      if (!flip(rng, spec.presence_prob)) continue;  // absent: closed-world miss
      const int n = 1 + int(uniform_below(rng, uint64_t(spec.max_instances)));
      MaskSet instances;
      for (int k = 0; k < n; ++k) {
        const int rw = 2 + int(uniform_below(rng, uint64_t(std::max(2, spec.width / 6))));
        const int rh = 2 + int(uniform_below(rng, uint64_t(std::max(2, spec.height / 6))));
        const int x0 = int(uniform_below(rng, uint64_t(std::max(1, spec.width - rw))));
        const int y0 = int(uniform_below(rng, uint64_t(std::max(1, spec.height - rh))));
        instances.elems.push_back(rect_mask(spec.width, spec.height, x0, y0, rw, rh));
      }
      world.oracle->add_entry(image.id, phrase, std::move(instances));
    }
  }
  return world;
}

void write_world(const SynthWorld& world, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  world.dataset->save_jsonl(dir / "manifest.jsonl");
  world.oracle->save_jsonl(dir / "oracle.jsonl");
}

}  // namespace geoprog
