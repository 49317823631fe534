#pragma once

// Independent reference implementations used as test oracles. Nothing here
// calls the code under test except to read inputs and leaf tensors.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "kgin/kspace/volume.hpp"
#include "kgin/numcore/tensor.hpp"
#include "kgin/pipeline/metrics.hpp"

namespace oracle {

using kgin::nc::Shape;
using TensorD = kgin::nc::Tensor<double>;

inline std::vector<double> uniform(std::size_t n, std::mt19937_64& gen, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

inline TensorD random_tensor(const Shape& shape, std::mt19937_64& gen, double lo = -1.0, double hi = 1.0) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return TensorD::from_data(shape, uniform(n, gen, lo, hi), true);
}

/// Norm-wise relative error ||a - b|| / max(||a||, ||b||, floor).
inline double rel_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-12) {
  double num = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(num) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

/// Central differences of a scalar function of the leaves' values.
inline std::vector<double> numeric_grad(const std::function<double()>& f, TensorD leaf, double h = 1e-6) {
  auto data = leaf.mutable_data();
  std::vector<double> g(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double keep = data[i];
    data[i] = keep + h;
    const double up = f();
    data[i] = keep - h;
    const double down = f();
    data[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

/// Worst relative error between reverse-mode and central-difference
/// gradients over `leaves`; `loss` rebuilds the graph each call.
inline double grad_check(const std::function<TensorD()>& loss, std::vector<TensorD> leaves, double h = 1e-6) {
  for (auto& l : leaves) l.zero_grad();
  auto out = loss();
  out.backward();
  double worst = 0;
  for (auto& l : leaves) {
    std::vector<double> analytic(l.numel(), 0.0);
    if (l.has_grad()) analytic.assign(l.grad().begin(), l.grad().end());
    const auto numeric = numeric_grad([&] { return loss().item(); }, l, h);
    worst = std::max(worst, rel_error(analytic, numeric));
  }
  return worst;
}

/// Centered orthonormal 2D DFT of every frame, by the defining double sum:
/// X[u,v] = 1/sqrt(XY) sum_{x,y} f[x,y] exp(-+2 pi i ((u-X/2)(x-X/2)/X + (v-Y/2)(y-Y/2)/Y)).
inline kgin::kspace::ComplexVolume direct_dft2(const kgin::kspace::ComplexVolume& in, bool inverse) {
  const std::size_t nx = in.x_dim(), ny = in.y_dim(), nt = in.t_dim();
  auto out = kgin::kspace::ComplexVolume(nx, ny, nt,
                                         inverse ? kgin::kspace::Domain::image : kgin::kspace::Domain::kspace,
                                         in.scale());
  const double sign = inverse ? 1.0 : -1.0;
  const double norm = 1.0 / std::sqrt(double(nx * ny));
  const double cx = double(nx / 2), cy = double(ny / 2);
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t u = 0; u < nx; ++u) {
      for (std::size_t v = 0; v < ny; ++v) {
        std::complex<double> acc = 0;
        for (std::size_t x = 0; x < nx; ++x) {
          for (std::size_t y = 0; y < ny; ++y) {
            const double ph = 2 * std::numbers::pi *
                              ((double(u) - cx) * (double(x) - cx) / double(nx) + (double(v) - cy) * (double(y) - cy) / double(ny));
            acc += in.at(x, y, t) * std::polar(1.0, sign * ph);
          }
        }
        out.set(u, v, t, acc * norm);
      }
    }
  }
  return out;
}

inline double psnr(const kgin::pipeline::MagnitudeVolume& est, const kgin::pipeline::MagnitudeVolume& ref) {
  double peak = ref.values[0], se = 0;
  for (auto v : ref.values) peak = std::max(peak, v);
  for (std::size_t i = 0; i < ref.values.size(); ++i) se += std::pow(est.values[i] - ref.values[i], 2);
  return 10.0 * std::log10(peak * peak / (se / double(ref.values.size())));
}

inline double nmse(const kgin::pipeline::MagnitudeVolume& est, const kgin::pipeline::MagnitudeVolume& ref) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < ref.values.size(); ++i) {
    num += std::pow(est.values[i] - ref.values[i], 2);
    den += std::pow(ref.values[i], 2);
  }
  return num / den;
}

/// Sliding 7x7 window evaluated pixel by pixel, no running sums.
inline double ssim(const kgin::pipeline::MagnitudeVolume& a, const kgin::pipeline::MagnitudeVolume& b,
                   std::size_t w = 7) {
  double lo = b.values[0], hi = b.values[0];
  for (auto v : b.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double L = hi - lo > 0 ? hi - lo : 1.0;
  const double c1 = std::pow(0.01 * L, 2), c2 = std::pow(0.03 * L, 2);
  double total = 0;
  std::size_t count = 0;
  for (std::size_t f = 0; f < b.t; ++f) {
    for (std::size_t j0 = 0; j0 + w <= b.y; ++j0) {
      for (std::size_t i0 = 0; i0 + w <= b.x; ++i0) {
        double ma = 0, mb = 0;
        for (std::size_t j = j0; j < j0 + w; ++j)
          for (std::size_t i = i0; i < i0 + w; ++i) {
            ma += a.at(i, j, f);
            mb += b.at(i, j, f);
          }
        const double n = double(w * w);
        ma /= n;
        mb /= n;
        double va = 0, vb = 0, cov = 0;
        for (std::size_t j = j0; j < j0 + w; ++j)
          for (std::size_t i = i0; i < i0 + w; ++i) {
            const double da = a.at(i, j, f) - ma, db = b.at(i, j, f) - mb;
            va += da * da;
            vb += db * db;
            cov += da * db;
          }
        va /= n;
        vb /= n;
        cov /= n;
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
    }
  }
  return total / double(count);
}

inline kgin::pipeline::MagnitudeVolume random_magnitudes(std::size_t x, std::size_t y, std::size_t t,
                                                         std::mt19937_64& gen) {
  return {x, y, t, uniform(x * y * t, gen, 0.0, 1.0)};
}

inline kgin::kspace::ComplexVolume random_volume(std::size_t x, std::size_t y, std::size_t t,
                                                 kgin::kspace::Domain d, std::mt19937_64& gen) {
  return {x, y, t, d, uniform(x * y * t, gen), uniform(x * y * t, gen)};
}

}  // namespace oracle
