#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "kgin/kspace/volume.hpp"

namespace kgin::sampling {

/// Binary ky-t Cartesian mask: a sampled (ky, t) acquires the full kx line.
class SamplingMask {
 public:
  SamplingMask() = default;
  SamplingMask(std::size_t y, std::size_t t, double r_nominal, std::uint64_t seed = 0);
  SamplingMask(std::size_t y, std::size_t t, double r_nominal, std::uint64_t seed, std::vector<std::uint8_t> bits);

  static SamplingMask full(std::size_t y, std::size_t t);

  std::size_t y_dim() const { return y_; }
  std::size_t t_dim() const { return t_; }
  double r_nominal() const { return r_; }
  std::uint64_t seed() const { return seed_; }

  bool sampled(std::size_t ky, std::size_t t) const { return bits_[t * y_ + ky] != 0; }
  void set(std::size_t ky, std::size_t t, bool on) { bits_[t * y_ + ky] = on ? 1 : 0; }

  std::size_t lines_in_frame(std::size_t t) const;
  std::size_t total_sampled() const;
  double sampled_fraction() const { return double(total_sampled()) / double(y_ * t_); }

  /// Sampled (ky, t) pairs ordered by (t, ky).
  std::vector<std::pair<std::size_t, std::size_t>> sampled_coords() const;
  std::vector<std::pair<std::size_t, std::size_t>> unsampled_coords() const;

  friend bool operator==(const SamplingMask&, const SamplingMask&) = default;

 private:
  std::size_t y_ = 0, t_ = 0;
  double r_ = 1.0;
  std::uint64_t seed_ = 0;
  std::vector<std::uint8_t> bits_;  // t outer, ky inner
};

/// Width of the always-sampled center band for a given line budget.
std::size_t center_band_width(std::size_t y, std::size_t lines_per_frame);

/// VISTA-like variable-density ky-t mask with exactly round(Y/R) lines per
/// frame. Requires Y >= 8, T >= 1, 1 < R <= Y.
SamplingMask generate_mask(std::size_t y, std::size_t t, double r, std::uint64_t seed);

struct MaskedKspace {
  kspace::ComplexVolume volume;
  std::vector<std::pair<std::size_t, std::size_t>> sampled;  // (ky, t), ordered by (t, ky)
};

MaskedKspace apply_mask(const kspace::ComplexVolume& k, const SamplingMask& m);

/// Sampled columns from `gt_sampled`, everything else from `est`.
kspace::ComplexVolume data_consistency(const kspace::ComplexVolume& est, const kspace::ComplexVolume& gt_sampled,
                                       const SamplingMask& m);

/// `.kmask`: "KMASK v1 Y T R seed" then T lines of Y '0'/'1' characters.
void write_mask(const SamplingMask& m, const std::filesystem::path& path);
SamplingMask read_mask(const std::filesystem::path& path);

}  // namespace kgin::sampling
