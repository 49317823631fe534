#include "kgin/phantom/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "kgin/error.hpp"

namespace kgin::phantom {
namespace {

constexpr int kSupersample = 4;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : gen_(seed ^ 0x9E3779B97F4A7C15ULL) {}
  double operator()() { return double(gen_() >> 11) * 0x1.0p-53; }
  double operator()(double lo, double hi) { return lo + (hi - lo) * (*this)(); }

 private:
  std::mt19937_64 gen_;
};

// Half extents of the axis-aligned bounding box of a rotated ellipse.
std::pair<double, double> half_extents(double rx, double ry, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {std::sqrt(rx * rx * c * c + ry * ry * s * s), std::sqrt(rx * rx * s * s + ry * ry * c * c)};
}

struct FramePose {
  double cx, cy, rx, ry;
};

FramePose pose_at(const Ellipse& e, double cycle) {
  const double squeeze = 0.5 * (1.0 - std::cos(kTwoPi * cycle));
  const double sway = std::sin(kTwoPi * cycle);
  return {e.cx + e.sway_x * sway, e.cy + e.sway_y * sway, e.rx - e.contraction * squeeze,
          e.ry - e.contraction * squeeze};
}

void check_fits(const PhantomSpec& spec, const PhantomLayout& layout) {
  for (std::size_t i = 0; i < layout.ellipses.size(); ++i) {
    const auto& e = layout.ellipses[i];
    if (e.contraction >= std::min(e.rx, e.ry)) {
      throw SpecError("phantom ellipse " + std::to_string(i) + " collapses: contraction exceeds its radius");
    }
    // Contraction only shrinks, so the rest pose bounds every frame.
    const auto [hx, hy] = half_extents(e.rx, e.ry, e.angle);
    const double sx = std::abs(e.sway_x), sy = std::abs(e.sway_y);
    if (e.cx - hx - sx < -0.5 || e.cx + hx + sx > double(spec.x) - 0.5 || e.cy - hy - sy < -0.5 ||
        e.cy + hy + sy > double(spec.y) - 0.5) {
      throw SpecError("phantom ellipse " + std::to_string(i) + " leaves the field of view");
    }
  }
}

}  // namespace

void PhantomSpec::validate() const {
  if (x < 8 || y < 8) throw SpecError("phantom extents must be >= 8");
  if (t < 2) throw SpecError("phantom needs T >= 2");
  if (n_ellipses < 2 || n_ellipses > 6) throw SpecError("phantom n_ellipses must be in [2, 6]");
  if (!(motion_amplitude >= 0) || motion_amplitude >= 0.5) throw SpecError("phantom motion amplitude must be in [0, 0.5)");
  if (period < 0) throw SpecError("phantom period must be positive (or 0 for T)");
}

PhantomLayout draw_layout(const PhantomSpec& spec) {
  spec.validate();
  Uniform u(spec.seed);
  const double X = double(spec.x), Y = double(spec.y);
  const double shrink = spec.motion_amplitude * Y;
  PhantomLayout layout;
  auto amp = [&](double lo, double hi) { return std::polar(u(lo, hi), u(-0.3, 0.3)); };

  const double bx = X / 2 + u(-0.03, 0.03) * X, by = Y / 2 + u(-0.03, 0.03) * Y;
  // Body.
  layout.ellipses.push_back({bx, by, u(0.30, 0.36) * X, u(0.28, 0.36) * Y, u(-0.3, 0.3), amp(0.25, 0.35), 0.0,
                             0.0, 0.0});
  // Ventricle blood pool: the contracting chamber.
  const double vx = bx + u(-0.06, 0.06) * X, vy = by + u(-0.06, 0.06) * Y;
  const double vr = std::max(u(0.10, 0.14) * std::min(X, Y), shrink + 1.5);
  const double sway = 0.25 * shrink;
  layout.ellipses.push_back({vx, vy, vr * u(0.9, 1.1), vr * u(0.9, 1.1), u(0.0, std::numbers::pi), amp(0.30, 0.40),
                             shrink, sway, 0.5 * sway});
  if (spec.n_ellipses >= 3) {
    // Myocardium wall around the ventricle, moving half as much.
    const double wall = u(0.05, 0.08) * std::min(X, Y);
    const auto& v = layout.ellipses[1];
    layout.ellipses.push_back({vx, vy, v.rx + wall, v.ry + wall, v.angle, amp(0.15, 0.25), 0.5 * shrink, sway,
                               0.5 * sway});
  }
  for (int i = 3; i < spec.n_ellipses; ++i) {
    const double r = u(0.05, 0.10) * std::min(X, Y);
    const double ang = u(0.0, kTwoPi);
    const double dist = u(0.15, 0.22) * std::min(X, Y);
    layout.ellipses.push_back({bx + dist * std::cos(ang), by + dist * std::sin(ang), r * u(0.8, 1.2),
                               r * u(0.8, 1.2), u(0.0, std::numbers::pi), amp(0.05, 0.15), 0.0, 0.0, 0.0});
  }
  // Additive rendering: keep the worst-case overlap within unit magnitude.
  double total = 0;
  for (const auto& e : layout.ellipses) total += std::abs(e.amplitude);
  if (total > 1.0) {
    for (auto& e : layout.ellipses) e.amplitude /= total;
  }
  layout.phase_coeffs = {u(-std::numbers::pi, std::numbers::pi), u(-0.6, 0.6), u(-0.6, 0.6),
                         u(-0.4, 0.4), u(-0.4, 0.4), u(-0.4, 0.4)};
  check_fits(spec, layout);
  return layout;
}

kspace::ComplexVolume render(const PhantomSpec& spec, const PhantomLayout& layout) {
  check_fits(spec, layout);
  const std::size_t X = spec.x, Y = spec.y, T = spec.t;
  const double period = spec.effective_period();
  kspace::ComplexVolume out(X, Y, T, kspace::Domain::image);
  const double inv_ss = 1.0 / double(kSupersample * kSupersample);
  const auto& pc = layout.phase_coeffs;

  for (std::size_t t = 0; t < T; ++t) {
    const double cycle = std::fmod(double(t), period) / period;
    std::vector<FramePose> poses;
    for (const auto& e : layout.ellipses) poses.push_back(pose_at(e, cycle));
    for (std::size_t y = 0; y < Y; ++y) {
      for (std::size_t x = 0; x < X; ++x) {
        std::complex<double> value = 0;
        for (std::size_t k = 0; k < poses.size(); ++k) {
          const auto& e = layout.ellipses[k];
          const auto& p = poses[k];
          const double c = std::cos(e.angle), s = std::sin(e.angle);
          int inside = 0;
          for (int i = 0; i < kSupersample; ++i) {
            for (int j = 0; j < kSupersample; ++j) {
              const double px = double(x) + (i + 0.5) / kSupersample - 0.5 - p.cx;
              const double py = double(y) + (j + 0.5) / kSupersample - 0.5 - p.cy;
              const double a = (px * c + py * s) / p.rx;
              const double b = (-px * s + py * c) / p.ry;
              inside += (a * a + b * b) <= 1.0;
            }
          }
          value += e.amplitude * (double(inside) * inv_ss);
        }
        const double uu = (double(x) - double(X) / 2) / (double(X) / 2);
        const double vv = (double(y) - double(Y) / 2) / (double(Y) / 2);
        const double phase = pc[0] + pc[1] * uu + pc[2] * vv + pc[3] * uu * vv + pc[4] * uu * uu + pc[5] * vv * vv;
        out.set(x, y, t, value * std::polar(1.0, phase));
      }
    }
  }
  return out;
}

kspace::ComplexVolume generate(const PhantomSpec& spec) { return render(spec, draw_layout(spec)); }

std::vector<DatasetItem> make_dataset(std::size_t n_train, std::size_t n_test, const DatasetSpec& spec,
                                      std::uint64_t seed, const std::filesystem::path& out_dir) {
  if (n_train < 1 || n_test < 1) throw SpecError("dataset needs at least one train and one test sequence");
  if (spec.min_ellipses > spec.max_ellipses) throw SpecError("dataset ellipse range is empty");
  std::filesystem::create_directories(out_dir);
  std::vector<DatasetItem> items;
  auto emit = [&](const std::string& split, std::size_t i, std::uint64_t item_seed) {
    PhantomSpec ps;
    ps.x = spec.x;
    ps.y = spec.y;
    ps.t = spec.t;
    ps.seed = item_seed;
    ps.motion_amplitude = spec.motion_amplitude;
    const int span = spec.max_ellipses - spec.min_ellipses + 1;
    ps.n_ellipses = spec.min_ellipses + int(Uniform(item_seed + 17)() * span);
    const auto image = kspace::normalize(generate(ps));
    const auto k = kspace::fft2(image);
    char stem[64];
    std::snprintf(stem, sizeof stem, "%s_%03zu", split.c_str(), i);
    DatasetItem item{split, item_seed, std::string(stem) + ".img.kvol", std::string(stem) + ".k.kvol"};
    kspace::write_volume(image, out_dir / item.image);
    kspace::write_volume(k, out_dir / item.kspace);
    items.push_back(std::move(item));
  };
  for (std::size_t i = 0; i < n_train; ++i) emit("train", i, seed + 2 * i);
  for (std::size_t i = 0; i < n_test; ++i) emit("test", i, seed + 2 * i + 1);

  std::ofstream manifest(out_dir / "manifest.txt");
  if (!manifest) throw IoError("cannot write manifest in " + out_dir.string());
  for (const auto& it : items) {
    manifest << it.split << " image " << it.image.string() << '\n';
    manifest << it.split << " kspace " << it.kspace.string() << '\n';
  }
  if (!manifest) throw IoError("manifest write failed in " + out_dir.string());
  return items;
}

}  // namespace kgin::phantom
