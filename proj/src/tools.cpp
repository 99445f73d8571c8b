#include "geoprog/tools.hpp"

#include <fstream>

#include <json.hpp>

namespace geoprog {

using nlohmann::json;

std::string normalize_phrase(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (ascii::is_space(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(ascii::lower(c));
  }
  return out;
}

void Dataset::add(ImageRef image) {
  if (image.width < 1 || image.height < 1)
    throw SchemaError("manifest: image dimensions must be positive: " + image.id);
  if (by_id_.count(image.id))
    throw SchemaError("manifest: duplicate image id: " + image.id);
  by_id_.emplace(image.id, images_.size());
  images_.push_back(std::move(image));
}

const ImageRef* Dataset::find(std::string_view image_id) const {
  auto it = by_id_.find(std::string(image_id));
  return it == by_id_.end() ? nullptr : &images_[it->second];
}

Dataset Dataset::load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  Dataset ds;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object() || !rec.contains("image_id") ||
        !rec.contains("w") || !rec.contains("h"))
      throw SchemaError("manifest: bad record", line_no);
    try {
      ds.add(ImageRef{rec.at("image_id").get<std::string>(), rec.at("w").get<int>(),
                      rec.at("h").get<int>()});
    } catch (const SchemaError& e) {
      throw SchemaError(e.what(), line_no);
    }
  }
  return ds;
}

void Dataset::save_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  for (const ImageRef& img : images_) {
    json rec = {{"image_id", img.id}, {"w", img.width}, {"h", img.height}};
    out << rec.dump() << "\n";
  }
}

std::string OracleIndex::key(std::string_view image_id, std::string_view norm_phrase) {
  std::string k(image_id);
  k.push_back('\x1f');
  k.append(norm_phrase);
  return k;
}

void OracleIndex::add_entry(const std::string& image_id, std::string_view phrase,
                            MaskSet masks) {
  const ImageRef* img = dataset_->find(image_id);
  if (!img) throw UnknownImageError("oracle: unknown image: " + image_id);
  for (const Mask& m : masks.elems)
    if (m.width() != img->width || m.height() != img->height)
      throw SchemaError("oracle: mask dimensions do not match image " + image_id);
  const std::string norm = normalize_phrase(phrase);
  const std::string k = key(image_id, norm);
  auto it = by_key_.find(k);
  if (it != by_key_.end()) {
    entries_[it->second].masks = std::move(masks);
    return;
  }
  by_key_.emplace(k, entries_.size());
  entries_.push_back(Entry{image_id, norm, std::move(masks)});
}

void OracleIndex::remove_entry(const std::string& image_id, std::string_view phrase) {
  const std::string k = key(image_id, normalize_phrase(phrase));
  auto it = by_key_.find(k);
  if (it == by_key_.end()) return;
  const size_t idx = it->second;
  by_key_.erase(it);
  entries_.erase(entries_.begin() + long(idx));
  for (auto& [_, pos] : by_key_)
    if (pos > idx) --pos;
}

MaskSet OracleIndex::segment(const ImageRef& image, std::string_view phrase) const {
  if (!dataset_->find(image.id))
    throw UnknownImageError("oracle: unknown image: " + image.id);
  auto it = by_key_.find(key(image.id, normalize_phrase(phrase)));
  if (it == by_key_.end()) return MaskSet{};  // closed-world miss
  return entries_[it->second].masks;
}

OracleIndex OracleIndex::load_jsonl(const std::filesystem::path& path,
                                    const Dataset& dataset) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open oracle index: " + path.string());
  OracleIndex idx(dataset);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object() || !rec.contains("image_id") ||
        !rec.contains("phrase") || !rec.contains("masks"))
      throw SchemaError("oracle index: bad record", line_no);
    MaskSet ms;
    try {
      for (const json& jm : rec.at("masks")) {
        const int w = jm.at("w").get<int>();
        const int h = jm.at("h").get<int>();
        ms.elems.push_back(rle_decode(jm.at("rle").get<std::vector<int64_t>>(), w, h));
      }
      idx.add_entry(rec.at("image_id").get<std::string>(),
                    rec.at("phrase").get<std::string>(), std::move(ms));
    } catch (const json::exception& e) {
      throw SchemaError(std::string("oracle index: ") + e.what(), line_no);
    } catch (const Error& e) {
      throw SchemaError(e.what(), line_no);
    }
  }
  return idx;
}

void OracleIndex::save_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write oracle index: " + path.string());
  for (const Entry& e : entries_) {
    json masks = json::array();
    for (const Mask& m : e.masks.elems)
      masks.push_back({{"w", m.width()}, {"h", m.height()}, {"rle", rle_encode(m)}});
    json rec = {{"image_id", e.image_id}, {"phrase", e.phrase}, {"masks", masks}};
    out << rec.dump() << "\n";
  }
}

}  // namespace geoprog
