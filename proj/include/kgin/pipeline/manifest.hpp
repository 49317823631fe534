#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "kgin/kspace/volume.hpp"

namespace kgin::pipeline {

struct ManifestEntry {
  std::string split;  // "train" | "test"
  std::filesystem::path image;
  std::filesystem::path kspace;
};

/// Split-labeled list of sequences. Lines are `<split> image|kspace <path>`,
/// paths relative to the manifest's directory unless absolute.
class Manifest {
 public:
  static Manifest read(const std::filesystem::path& path);

  const std::vector<ManifestEntry>& entries() const { return entries_; }
  std::vector<ManifestEntry> split(const std::string& name) const;

  kspace::ComplexVolume load_kspace(const ManifestEntry& e) const;
  kspace::ComplexVolume load_image(const ManifestEntry& e) const;

  /// Called with every volume path before it is opened.
  std::function<void(const std::filesystem::path&)> on_read;

 private:
  kspace::ComplexVolume load(const std::filesystem::path& p) const;

  std::filesystem::path dir_;
  std::vector<ManifestEntry> entries_;
};

}  // namespace kgin::pipeline
