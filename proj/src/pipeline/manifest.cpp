#include "kgin/pipeline/manifest.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "kgin/error.hpp"

namespace kgin::pipeline {

Manifest Manifest::read(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open manifest " + path.string());
  Manifest m;
  m.dir_ = path.parent_path();

  // Pair image/kspace lines per split in order of appearance.
  std::map<std::string, std::vector<ManifestEntry>> by_split;
  std::map<std::string, std::size_t> images, kspaces;
  std::vector<std::string> order;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string split, kind, file, extra;
    if (!(ls >> split >> kind >> file) || (ls >> extra)) {
      throw FormatError("manifest line " + std::to_string(lineno) + ": expected '<split> <kind> <path>'");
    }
    if (split != "train" && split != "test") {
      throw FormatError("manifest line " + std::to_string(lineno) + ": unknown split '" + split + "'");
    }
    if (kind != "image" && kind != "kspace") {
      throw FormatError("manifest line " + std::to_string(lineno) + ": unknown kind '" + kind + "'");
    }
    if (!by_split.count(split)) order.push_back(split);
    auto& list = by_split[split];
    std::size_t& n = kind == "image" ? images[split] : kspaces[split];
    if (n == list.size()) list.push_back({split, {}, {}});
    (kind == "image" ? list[n].image : list[n].kspace) = file;
    ++n;
  }
  for (const auto& s : order) {
    if (images[s] != kspaces[s]) throw FormatError("manifest split '" + s + "' has unpaired image/kspace lines");
    for (auto& e : by_split[s]) m.entries_.push_back(std::move(e));
  }
  if (m.entries_.empty()) throw FormatError("manifest " + path.string() + " lists no sequences");
  return m;
}

std::vector<ManifestEntry> Manifest::split(const std::string& name) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries_) {
    if (e.split == name) out.push_back(e);
  }
  return out;
}

kspace::ComplexVolume Manifest::load(const std::filesystem::path& p) const {
  const auto full = p.is_absolute() ? p : dir_ / p;
  if (on_read) on_read(full);
  return kspace::read_volume(full);
}

kspace::ComplexVolume Manifest::load_kspace(const ManifestEntry& e) const {
  auto v = load(e.kspace);
  if (v.domain() != kspace::Domain::kspace) throw FormatError(e.kspace.string() + " is not a k-space volume");
  return v;
}

kspace::ComplexVolume Manifest::load_image(const ManifestEntry& e) const {
  auto v = load(e.image);
  if (v.domain() != kspace::Domain::image) throw FormatError(e.image.string() + " is not an image volume");
  return v;
}

}  // namespace kgin::pipeline
