#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace kgin::pipeline {

/// Magnitude image sequence, x fastest, then y, then t.
struct MagnitudeVolume {
  std::size_t x = 0, y = 0, t = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j, std::size_t f) const { return values[i + x * (j + y * f)]; }
};

/// Sequence-level PSNR in dB: 10 log10(max(ref)^2 / MSE) over every voxel.
/// Returns nullopt when the estimate matches exactly (infinite PSNR).
std::optional<double> psnr(const MagnitudeVolume& estimate, const MagnitudeVolume& reference);

/// ||est - ref||^2 / ||ref||^2.
double nmse(const MagnitudeVolume& estimate, const MagnitudeVolume& reference);

struct SsimParams {
  std::size_t window = 7;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Per-frame 2D SSIM with a uniform window (valid positions only, population
/// statistics), dynamic range max(ref) - min(ref) over the sequence; mean
/// over frames and window positions.
double ssim(const MagnitudeVolume& estimate, const MagnitudeVolume& reference, const SsimParams& params = {});

}  // namespace kgin::pipeline
