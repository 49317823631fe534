#include "kgin/sampling/mask.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "kgin/error.hpp"

namespace kgin::sampling {

SamplingMask::SamplingMask(std::size_t y, std::size_t t, double r_nominal, std::uint64_t seed)
    : SamplingMask(y, t, r_nominal, seed, std::vector<std::uint8_t>(y * t, 0)) {}

SamplingMask::SamplingMask(std::size_t y, std::size_t t, double r_nominal, std::uint64_t seed,
                           std::vector<std::uint8_t> bits)
    : y_(y), t_(t), r_(r_nominal), seed_(seed), bits_(std::move(bits)) {
  if (y == 0 || t == 0) throw DimensionError("mask extents must be positive");
  if (bits_.size() != y * t) throw DimensionError("mask bit count does not match Y*T");
  if (!(r_nominal >= 1)) throw SpecError("mask R must be >= 1");
  for (auto& b : bits_) b = b ? 1 : 0;
}

SamplingMask SamplingMask::full(std::size_t y, std::size_t t) {
  return SamplingMask(y, t, 1.0, 0, std::vector<std::uint8_t>(y * t, 1));
}

std::size_t SamplingMask::lines_in_frame(std::size_t t) const {
  return static_cast<std::size_t>(std::count(bits_.begin() + t * y_, bits_.begin() + (t + 1) * y_, 1));
}

std::size_t SamplingMask::total_sampled() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

std::vector<std::pair<std::size_t, std::size_t>> SamplingMask::sampled_coords() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t t = 0; t < t_; ++t)
    for (std::size_t ky = 0; ky < y_; ++ky)
      if (sampled(ky, t)) out.emplace_back(ky, t);
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> SamplingMask::unsampled_coords() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t t = 0; t < t_; ++t)
    for (std::size_t ky = 0; ky < y_; ++ky)
      if (!sampled(ky, t)) out.emplace_back(ky, t);
  return out;
}

std::size_t center_band_width(std::size_t y, std::size_t lines_per_frame) {
  return std::min(std::max<std::size_t>(1, y / 16), lines_per_frame);
}

SamplingMask generate_mask(std::size_t y, std::size_t t, double r, std::uint64_t seed) {
  if (y < 8) throw SpecError("mask needs Y >= 8, got " + std::to_string(y));
  if (t < 1) throw SpecError("mask needs T >= 1");
  if (!(r > 1) || r > double(y)) throw SpecError("mask R must satisfy 1 < R <= Y, got " + std::to_string(r));

  const auto per_frame = static_cast<std::size_t>(std::llround(double(y) / r));
  const std::size_t band = center_band_width(y, per_frame);
  const std::size_t band_start = y / 2 - band / 2;
  const double center = double(y) / 2;

  std::mt19937_64 gen(seed ^ 0xA0761D6478BD642FULL);
  auto uniform = [&gen] { return double(gen() >> 11) * 0x1.0p-53; };

  std::vector<double> density(y);
  for (std::size_t ky = 0; ky < y; ++ky) {
    const double d = 1.0 + std::abs(double(ky) - center) / double(y);
    density[ky] = 1.0 / (d * d);
  }
  // Frames since each line was last acquired, started at a random temporal
  // phase per line. Stale lines are favoured so neighbouring frames differ.
  std::vector<double> staleness(y);
  const auto phases = static_cast<std::size_t>(std::ceil(r));
  for (auto& s : staleness) s = double(static_cast<std::size_t>(uniform() * double(phases)));

  SamplingMask mask(y, t, r, seed);
  std::vector<double> weight(y);
  for (std::size_t f = 0; f < t; ++f) {
    std::vector<bool> taken(y, false);
    for (std::size_t ky = band_start; ky < band_start + band; ++ky) taken[ky] = true;
    for (std::size_t draw = band; draw < per_frame; ++draw) {
      double total = 0;
      for (std::size_t ky = 0; ky < y; ++ky) {
        weight[ky] = taken[ky] ? 0.0 : density[ky] * (1.0 + staleness[ky]);
        total += weight[ky];
      }
      double target = uniform() * total;
      std::size_t pick = y;
      for (std::size_t ky = 0; ky < y; ++ky) {
        if (weight[ky] == 0.0) continue;
        pick = ky;
        target -= weight[ky];
        if (target < 0) break;
      }
      taken[pick] = true;
    }
    for (std::size_t ky = 0; ky < y; ++ky) {
      mask.set(ky, f, taken[ky]);
      staleness[ky] = taken[ky] ? 0.0 : staleness[ky] + 1.0;
    }
  }
  return mask;
}

namespace {
void require_mask_dims(const kspace::ComplexVolume& k, const SamplingMask& m, const char* what) {
  if (k.y_dim() != m.y_dim() || k.t_dim() != m.t_dim()) {
    throw DimensionError(std::string(what) + ": mask " + std::to_string(m.y_dim()) + "x" + std::to_string(m.t_dim()) +
                         " vs volume Y x T " + std::to_string(k.y_dim()) + "x" + std::to_string(k.t_dim()));
  }
}
}  // namespace

MaskedKspace apply_mask(const kspace::ComplexVolume& k, const SamplingMask& m) {
  require_mask_dims(k, m, "apply_mask");
  MaskedKspace out{k, m.sampled_coords()};
  for (std::size_t t = 0; t < k.t_dim(); ++t) {
    for (std::size_t ky = 0; ky < k.y_dim(); ++ky) {
      if (m.sampled(ky, t)) continue;
      for (std::size_t kx = 0; kx < k.x_dim(); ++kx) out.volume.set(kx, ky, t, 0.0);
    }
  }
  return out;
}

kspace::ComplexVolume data_consistency(const kspace::ComplexVolume& est, const kspace::ComplexVolume& gt_sampled,
                                       const SamplingMask& m) {
  est.require_same_dims(gt_sampled, "data_consistency");
  require_mask_dims(est, m, "data_consistency");
  kspace::ComplexVolume out = est;
  for (std::size_t t = 0; t < est.t_dim(); ++t) {
    for (std::size_t ky = 0; ky < est.y_dim(); ++ky) {
      if (!m.sampled(ky, t)) continue;
      for (std::size_t kx = 0; kx < est.x_dim(); ++kx) out.set(kx, ky, t, gt_sampled.at(kx, ky, t));
    }
  }
  return out;
}

void write_mask(const SamplingMask& m, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  char rbuf[32];
  const auto res = std::to_chars(rbuf, rbuf + sizeof rbuf, m.r_nominal());
  os << "KMASK v1 " << m.y_dim() << ' ' << m.t_dim() << ' ' << std::string(rbuf, res.ptr) << ' ' << m.seed() << '\n';
  for (std::size_t t = 0; t < m.t_dim(); ++t) {
    std::string line(m.y_dim(), '0');
    for (std::size_t ky = 0; ky < m.y_dim(); ++ky)
      if (m.sampled(ky, t)) line[ky] = '1';
    os << line << '\n';
  }
  if (!os) throw IoError("write failed for " + path.string());
}

SamplingMask read_mask(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  const std::string where = path.string() + ": ";
  std::string header;
  std::getline(is, header);
  std::istringstream hs(header);
  std::string magic, version, r_text;
  std::size_t y = 0, t = 0;
  std::uint64_t seed = 0;
  if (!(hs >> magic) || magic != "KMASK") throw FormatError(where + "bad magic");
  if (!(hs >> version) || version != "v1") throw FormatError(where + "unsupported version");
  if (!(hs >> y >> t >> r_text >> seed) || y == 0 || t == 0) throw FormatError(where + "malformed header fields");
  double r = 0;
  const auto res = std::from_chars(r_text.data(), r_text.data() + r_text.size(), r);
  if (res.ec != std::errc() || res.ptr != r_text.data() + r_text.size()) throw FormatError(where + "malformed R");
  std::vector<std::uint8_t> bits(y * t);
  for (std::size_t f = 0; f < t; ++f) {
    std::string line;
    if (!std::getline(is, line)) throw FormatError(where + "truncated at frame " + std::to_string(f));
    if (line.size() != y) throw FormatError(where + "frame " + std::to_string(f) + " has wrong line count");
    for (std::size_t ky = 0; ky < y; ++ky) {
      if (line[ky] != '0' && line[ky] != '1') throw FormatError(where + "bad character in frame " + std::to_string(f));
      bits[f * y + ky] = line[ky] == '1';
    }
  }
  return SamplingMask(y, t, r, seed, std::move(bits));
}

}  // namespace kgin::sampling
