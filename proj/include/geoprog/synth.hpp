#pragma once

#include <memory>
#include <string>
#include <vector>

#include "geoprog/tools.hpp"

// Deterministic synthetic fixture worlds: a manifest of images and a
// segmentation oracle index with rectangular instances, generated from a
// seed. Used by the fixtures CLI subcommand, the test suites, and README
// walkthroughs; no real imagery is involved.

namespace geoprog {

struct SynthSpec {
  size_t n_images = 24;
  size_t n_phrases = 12;
  int width = 64;
  int height = 64;
  uint64_t seed = 7;
  double presence_prob = 0.7;  // chance a phrase occurs in an image
  int max_instances = 3;
};

struct SynthWorld {
  std::unique_ptr<Dataset> dataset;
  std::unique_ptr<OracleIndex> oracle;
  std::vector<std::string> phrases;
};

SynthWorld make_synthetic_world(const SynthSpec& spec);

// Writes manifest.jsonl and oracle.jsonl into dir.
void write_world(const SynthWorld& world, const std::filesystem::path& dir);

}  // namespace geoprog
