#include "kgin/pipeline/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "kgin/error.hpp"

namespace kgin::pipeline {
namespace {

void require_comparable(const MagnitudeVolume& a, const MagnitudeVolume& b, const char* what) {
  if (a.x != b.x || a.y != b.y || a.t != b.t || a.values.size() != b.values.size() ||
      a.values.size() != a.x * a.y * a.t) {
    throw DimensionError(std::string(what) + ": estimate and reference shapes differ");
  }
  if (a.values.empty()) throw DimensionError(std::string(what) + ": empty volume");
}

}  // namespace

std::optional<double> psnr(const MagnitudeVolume& estimate, const MagnitudeVolume& reference) {
  require_comparable(estimate, reference, "psnr");
  const double peak = *std::max_element(reference.values.begin(), reference.values.end());
  if (!(peak > 0)) throw DegenerateInputError("psnr: reference has no positive peak");
  double se = 0;
  for (std::size_t i = 0; i < estimate.values.size(); ++i) {
    const double d = estimate.values[i] - reference.values[i];
    se += d * d;
  }
  if (se == 0) return std::nullopt;
  const double mse = se / double(estimate.values.size());
  return 10.0 * std::log10(peak * peak / mse);
}

double nmse(const MagnitudeVolume& estimate, const MagnitudeVolume& reference) {
  require_comparable(estimate, reference, "nmse");
  double num = 0, den = 0;
  for (std::size_t i = 0; i < estimate.values.size(); ++i) {
    const double d = estimate.values[i] - reference.values[i];
    num += d * d;
    den += reference.values[i] * reference.values[i];
  }
  if (!(den > 0)) throw DegenerateInputError("nmse: reference is all zero");
  return num / den;
}

double ssim(const MagnitudeVolume& estimate, const MagnitudeVolume& reference, const SsimParams& params) {
  require_comparable(estimate, reference, "ssim");
  const std::size_t w = params.window;
  const std::size_t nx = reference.x, ny = reference.y;
  if (w == 0 || nx < w || ny < w) throw DimensionError("ssim: frame smaller than the window");

  const auto [lo, hi] = std::minmax_element(reference.values.begin(), reference.values.end());
  double range = *hi - *lo;
  if (!(range > 0)) range = 1.0;
  const double c1 = (params.k1 * range) * (params.k1 * range);
  const double c2 = (params.k2 * range) * (params.k2 * range);

  // Summed-area tables of a, b, a^2, b^2 and ab per frame, (nx+1) x (ny+1).
  const std::size_t sx = nx + 1;
  std::vector<double> sa(sx * (ny + 1)), sb(sa.size()), saa(sa.size()), sbb(sa.size()), sab(sa.size());
  auto box = [&](const std::vector<double>& s, std::size_t i, std::size_t j) {
    return s[(i + w) + sx * (j + w)] - s[i + sx * (j + w)] - s[(i + w) + sx * j] + s[i + sx * j];
  };
  const double inv_n = 1.0 / double(w * w);
  double total = 0;
  std::size_t count = 0;
  for (std::size_t f = 0; f < reference.t; ++f) {
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i < nx; ++i) {
        const double a = estimate.at(i, j, f), b = reference.at(i, j, f);
        const std::size_t k = (i + 1) + sx * (j + 1);
        const std::size_t left = i + sx * (j + 1), up = (i + 1) + sx * j, diag = i + sx * j;
        sa[k] = a + sa[left] + sa[up] - sa[diag];
        sb[k] = b + sb[left] + sb[up] - sb[diag];
        saa[k] = a * a + saa[left] + saa[up] - saa[diag];
        sbb[k] = b * b + sbb[left] + sbb[up] - sbb[diag];
        sab[k] = a * b + sab[left] + sab[up] - sab[diag];
      }
    }
    for (std::size_t j = 0; j + w <= ny; ++j) {
      for (std::size_t i = 0; i + w <= nx; ++i) {
        const double mu_a = box(sa, i, j) * inv_n, mu_b = box(sb, i, j) * inv_n;
        const double var_a = std::max(0.0, box(saa, i, j) * inv_n - mu_a * mu_a);
        const double var_b = std::max(0.0, box(sbb, i, j) * inv_n - mu_b * mu_b);
        const double cov = box(sab, i, j) * inv_n - mu_a * mu_b;
        total += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
        ++count;
      }
    }
  }
  return total / double(count);
}

}  // namespace kgin::pipeline
