#pragma once

// Hand-built worlds shared by unit and acceptance suites: the seed-template
// scenario, the ship/quadrant deduction scenario, and the two taxonomy
// program transliterations, plus temp-dir plumbing.

#include <filesystem>
#include <string>

#include "geoprog/bank.hpp"
#include "geoprog/synth.hpp"

namespace fixtures {

using namespace geoprog;

inline Mask rect(int w, int h, int x0, int y0, int rw, int rh) {
  Mask m(w, h);
  for (int y = y0; y < y0 + rh; ++y)
    for (int x = x0; x < x0 + rw; ++x) m.set(x, y);
  return m;
}

// One 32x32 image holding a building and a roof (two phrases that both
// segment to something), nothing else.
struct SeedWorld {
  Dataset dataset;
  std::unique_ptr<OracleIndex> oracle;
  ImageRef image;

  SeedWorld() {
    dataset.add(ImageRef{"seed-img", 32, 32});
    image = *dataset.find("seed-img");
    oracle = std::make_unique<OracleIndex>(dataset);
    MaskSet building;
    building.elems.push_back(rect(32, 32, 4, 4, 6, 6));
    oracle->add_entry("seed-img", "building", std::move(building));
    MaskSet roof;
    roof.elems.push_back(rect(32, 32, 5, 5, 3, 3));
    oracle->add_entry("seed-img", "roof", std::move(roof));
  }
};

inline const char* seed_program_text() { return "(exists (segment image arg))"; }

// Ships in a 40x40 harbor; the largest ship's centroid falls in the top-right
// quadrant, so the quadrant-of-largest program answers "TR".
struct ShipWorld {
  Dataset dataset;
  std::unique_ptr<OracleIndex> oracle;
  ImageRef image;

  ShipWorld() {
    dataset.add(ImageRef{"harbor", 40, 40});
    image = *dataset.find("harbor");
    oracle = std::make_unique<OracleIndex>(dataset);
    MaskSet ships;
    ships.elems.push_back(rect(40, 40, 2, 30, 4, 3));    // small, bottom-left
    ships.elems.push_back(rect(40, 40, 26, 4, 10, 6));   // largest, top-right
    ships.elems.push_back(rect(40, 40, 6, 6, 3, 2));     // small, top-left
    oracle->add_entry("harbor", "ship", std::move(ships));
  }
};

inline const char* ship_quadrant_program_text() {
  return "(let ((ms (segment image arg)))"
         " (quadrant (centroid (nth ms (largest ms))) image))";
}

// Scene made of water and vegetation regions, water clearly larger, for the
// area-comparison transliteration.
struct SceneWorld {
  Dataset dataset;
  std::unique_ptr<OracleIndex> oracle;
  ImageRef image;

  SceneWorld() {
    dataset.add(ImageRef{"scene", 48, 48});
    image = *dataset.find("scene");
    oracle = std::make_unique<OracleIndex>(dataset);
    MaskSet water;
    water.elems.push_back(rect(48, 48, 0, 24, 48, 20));
    oracle->add_entry("scene", "water", std::move(water));
    MaskSet vegetation;
    vegetation.elems.push_back(rect(48, 48, 2, 2, 8, 8));
    oracle->add_entry("scene", "vegetation", std::move(vegetation));
    MaskSet vehicles;
    vehicles.elems.push_back(rect(48, 48, 4, 16, 3, 2));   // near the road
    vehicles.elems.push_back(rect(48, 48, 40, 2, 3, 2));   // far corner
    oracle->add_entry("scene", "vehicle", std::move(vehicles));
    MaskSet road;
    road.elems.push_back(rect(48, 48, 0, 20, 48, 3));
    oracle->add_entry("scene", "road", std::move(road));
  }
};

// Area comparison with the scene phrases inlined as program literals.
inline const char* area_compare_program_text() {
  return "(let ((m1 (union (segment image \"water\")))"
         " (m2 (union (segment image \"vegetation\"))))"
         " (if (> (area m1) (area m2)) \"water\" \"vegetation\"))";
}

// Vehicle-nearest-reference quadrant program: "vehicle" is a program literal,
// the reference phrase arrives via arg.
inline const char* nearest_quadrant_program_text() {
  return "(let ((xs (segment image \"vehicle\")) (ref (union (segment image arg))))"
         " (quadrant (centroid (nth xs (nearest xs ref))) image))";
}

inline ProgramSource compile_or_throw(const std::string& text) {
  auto compiled = ProgramSource::compile(text);
  if (auto* e = std::get_if<CompileError>(&compiled))
    throw Error(std::string("fixture program failed to compile: ") + e->message);
  return std::get<ProgramSource>(compiled);
}

// Scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("geoprog-" + tag + "-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

}  // namespace fixtures
