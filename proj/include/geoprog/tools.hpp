#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "geoprog/raster.hpp"

// The tool registry: a pluggable open-vocabulary segmenter interface with a
// deterministic file-backed oracle implementation standing in for a neural
// segmenter.

namespace geoprog {

// Locale-independent ASCII classification: <cctype> consults the process
// locale, which would let the environment change normalization and parsing
// behavior.
namespace ascii {
inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
inline bool is_alnum(char c) { return is_digit(c) || is_alpha(c); }
inline char lower(char c) { return (c >= 'A' && c <= 'Z') ? char(c + 32) : c; }
}  // namespace ascii

// Lowercase, trimmed, internal whitespace collapsed to single spaces.
std::string normalize_phrase(std::string_view s);

// Dataset manifest: JSON Lines of {"image_id": str, "w": int, "h": int}.
class Dataset {
 public:
  static Dataset load_jsonl(const std::filesystem::path& path);
  void save_jsonl(const std::filesystem::path& path) const;

  void add(ImageRef image);
  const ImageRef* find(std::string_view image_id) const;
  const std::vector<ImageRef>& images() const { return images_; }

 private:
  std::vector<ImageRef> images_;
  std::unordered_map<std::string, size_t> by_id_;
};

class SegmenterProvider {
 public:
  virtual ~SegmenterProvider() = default;
  // Deterministic: identical (image, normalized phrase) always yields an
  // identical MaskSet whose masks match the image dimensions. Unknown phrases
  // yield an empty MaskSet, never an error.
  virtual MaskSet segment(const ImageRef& image, std::string_view phrase) const = 0;
};

// Read-only index from (image id, normalized phrase) to instance masks.
// Segmentation index file: JSON Lines, one record per (image, phrase):
//   {"image_id": str, "phrase": str, "masks": [{"w":int,"h":int,"rle":[...]}]}
class OracleIndex final : public SegmenterProvider {
 public:
  static constexpr const char* kNormalizerVersion = "ws-lc-1";

  static OracleIndex load_jsonl(const std::filesystem::path& path, const Dataset& dataset);
  void save_jsonl(const std::filesystem::path& path) const;

  void add_entry(const std::string& image_id, std::string_view phrase, MaskSet masks);
  void remove_entry(const std::string& image_id, std::string_view phrase);

  // Throws UnknownImageError when the image is not in the manifest.
  MaskSet segment(const ImageRef& image, std::string_view phrase) const override;

  const Dataset& dataset() const { return *dataset_; }
  size_t entry_count() const { return entries_.size(); }

  explicit OracleIndex(const Dataset& dataset) : dataset_(&dataset) {}

 private:
  struct Entry {
    std::string image_id;
    std::string phrase;  // normalized
    MaskSet masks;
  };
  const Dataset* dataset_;
  std::vector<Entry> entries_;  // insertion order, for stable save
  std::unordered_map<std::string, size_t> by_key_;

  static std::string key(std::string_view image_id, std::string_view norm_phrase);
};

}  // namespace geoprog
