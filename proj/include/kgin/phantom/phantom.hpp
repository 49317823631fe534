#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kgin/kspace/volume.hpp"

namespace kgin::phantom {

struct PhantomSpec {
  std::size_t x = 32;
  std::size_t y = 32;
  std::size_t t = 8;
  std::uint64_t seed = 0;
  int n_ellipses = 4;             // 2..6
  double motion_amplitude = 0.08;  // peak contraction, as a fraction of Y
  double period = 0;               // frames per cardiac cycle; <= 0 means T

  void validate() const;
  double effective_period() const { return period > 0 ? period : double(t); }
};

/// One ellipse of the phantom at rest. Geometry in pixels.
struct Ellipse {
  double cx, cy;         // center (row x, column y)
  double rx, ry;         // semi-axes
  double angle;          // radians
  std::complex<double> amplitude;
  double contraction;    // radius shrink at peak systole, pixels
  double sway_x, sway_y; // center displacement amplitude, pixels
};

struct PhantomLayout {
  std::vector<Ellipse> ellipses;
  std::vector<double> phase_coeffs;  // constant, u, v, uv, u^2, v^2
};

/// Draws the ellipse layout and phase map for `spec.seed`.
PhantomLayout draw_layout(const PhantomSpec& spec);

/// Renders a dynamic complex image sequence. Deterministic in the spec.
kspace::ComplexVolume generate(const PhantomSpec& spec);
kspace::ComplexVolume render(const PhantomSpec& spec, const PhantomLayout& layout);

struct DatasetSpec {
  std::size_t x = 32, y = 32, t = 8;
  int min_ellipses = 3;
  int max_ellipses = 6;
  double motion_amplitude = 0.08;
};

struct DatasetItem {
  std::string split;  // "train" | "test"
  std::uint64_t seed;
  std::filesystem::path image;
  std::filesystem::path kspace;
};

/// Writes normalized image volumes, their k-space, and `manifest.txt` into
/// `out_dir`. Train item i uses seed base+2i, test item i uses base+2i+1.
std::vector<DatasetItem> make_dataset(std::size_t n_train, std::size_t n_test, const DatasetSpec& spec,
                                      std::uint64_t seed, const std::filesystem::path& out_dir);

}  // namespace kgin::phantom
