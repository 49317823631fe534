#include "kgin/pipeline/recon.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "kgin/error.hpp"
#include "kgin/numcore/tensor.hpp"
#include "kgin/pipeline/train.hpp"

namespace kgin::pipeline {
namespace {

kspace::ComplexVolume divided(const kspace::ComplexVolume& v, double m) {
  auto out = v.with_scale(v.scale() * m);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.re()[i] /= m;
    out.im()[i] /= m;
  }
  return out;
}

std::string sequence_name(const std::filesystem::path& p) {
  const auto f = p.filename().string();
  return f.substr(0, f.find('.'));
}

std::string fmt(double v) {
  if (std::isinf(v)) return "inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string fmt_psnr(const std::optional<double>& v) { return v ? fmt(*v) : "inf"; }

std::string fmt_agg(const Aggregate& a) { return a.infinite ? "inf" : fmt(a.mean); }
std::string fmt_agg_std(const Aggregate& a) { return a.infinite ? "nan" : fmt(a.std); }

Aggregate aggregate(const std::vector<double>& v, bool infinite) {
  Aggregate a;
  a.infinite = infinite;
  if (infinite || v.empty()) return a;
  for (double x : v) a.mean += x;
  a.mean /= double(v.size());
  for (double x : v) a.std += (x - a.mean) * (x - a.mean);
  a.std = std::sqrt(a.std / double(v.size()));
  return a;
}

}  // namespace

std::pair<kspace::ComplexVolume, kspace::ComplexVolume> normalized_pair(const kspace::ComplexVolume& k,
                                                                        const sampling::SamplingMask& mask) {
  auto masked = sampling::apply_mask(k, mask).volume;
  const double m = masked.max_magnitude();
  if (!(m > 0)) throw DegenerateInputError("sampled k-space is all zero");
  return {divided(masked, m), divided(k, m)};
}

template <typename T>
InferResult infer(const model::KspaceNetwork<T>& net, const kspace::ComplexVolume& k,
                  const sampling::SamplingMask& mask) {
  const auto& cfg = net.config();
  if (k.domain() != kspace::Domain::kspace) throw DimensionError("infer expects a k-space volume");
  if (k.x_dim() != cfg.x || k.y_dim() != cfg.y || k.t_dim() != cfg.t) {
    throw DimensionError("input dims " + std::to_string(k.x_dim()) + "x" + std::to_string(k.y_dim()) + "x" +
                         std::to_string(k.t_dim()) + " do not match the model (" + cfg.describe() + ")");
  }
  if (mask.y_dim() != cfg.y || mask.t_dim() != cfg.t) throw DimensionError("mask dims do not match the model");

  InferResult r;
  auto masked = sampling::apply_mask(k, mask).volume;
  // Normalize relative to the input's own units so that denormalizing lands
  // back in them, whatever scale the input already carries.
  r.input = kspace::normalize(masked.with_scale(1.0));
  kspace::ComplexVolume estimate;
  {
    nc::NoGradGuard no_grad;
    const auto out = net.forward(model::to_tensor<T>(r.input), mask);
    estimate = model::to_volume(out.refined[2], kspace::Domain::kspace, r.input.scale());
  }
  r.kspace_normalized = sampling::data_consistency(estimate, r.input, mask);
  // Re-insert in the input's units too: (k / m) * m is not always k.
  r.kspace = sampling::data_consistency(kspace::denormalize(r.kspace_normalized).with_scale(k.scale()), masked, mask);
  r.image = kspace::ifft2(r.kspace);
  return r;
}

kspace::ComplexVolume zero_filled(const kspace::ComplexVolume& k, const sampling::SamplingMask& mask) {
  return kspace::ifft2(sampling::apply_mask(k, mask).volume);
}

MagnitudeVolume magnitude_of(const kspace::ComplexVolume& image) {
  return {image.x_dim(), image.y_dim(), image.t_dim(), image.magnitude()};
}

SequenceMetrics measure(const std::string& name, const MagnitudeVolume& estimate, const MagnitudeVolume& reference) {
  return {name, nmse(estimate, reference), ssim(estimate, reference), psnr(estimate, reference)};
}

MetricSummary summarize(const std::vector<SequenceMetrics>& rows) {
  std::vector<double> n, s, p;
  bool inf = false;
  for (const auto& r : rows) {
    n.push_back(r.nmse);
    s.push_back(r.ssim);
    if (r.psnr) p.push_back(*r.psnr);
    else inf = true;
  }
  return {aggregate(n, false), aggregate(s, false), aggregate(p, inf)};
}

std::uint64_t eval_mask_seed(std::uint64_t seed, double r, std::size_t index) {
  return derive_seed(derive_seed(seed, std::bit_cast<std::uint64_t>(r)), index);
}

template <typename T>
std::vector<ReconReport> evaluate(const model::KspaceNetwork<T>& net, const Manifest& manifest,
                                  const std::vector<double>& r_list, std::uint64_t seed,
                                  const std::string& checkpoint_id) {
  if (r_list.empty()) throw ConfigError("evaluate needs at least one R");
  const auto tests = manifest.split("test");
  if (tests.empty()) throw DegenerateInputError("manifest has no test sequences");
  const auto& cfg = net.config();

  std::vector<kspace::ComplexVolume> ks;
  std::vector<MagnitudeVolume> refs;
  for (const auto& e : tests) {
    ks.push_back(manifest.load_kspace(e));
    refs.push_back(magnitude_of(kspace::ifft2(ks.back())));
  }

  std::vector<ReconReport> reports;
  for (double r : r_list) {
    ReconReport rep;
    rep.r = r;
    rep.mask_seed = seed;
    rep.checkpoint_id = checkpoint_id;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const auto mask = sampling::generate_mask(cfg.y, cfg.t, r, eval_mask_seed(seed, r, i));
      const auto name = sequence_name(tests[i].kspace);
      const auto out = infer(net, ks[i], mask);
      rep.recon.push_back(measure(name, magnitude_of(out.image), refs[i]));
      rep.zero_filled.push_back(measure(name, magnitude_of(zero_filled(ks[i], mask)), refs[i]));
    }
    rep.recon_summary = summarize(rep.recon);
    rep.zero_filled_summary = summarize(rep.zero_filled);
    reports.push_back(std::move(rep));
  }
  return reports;
}

void write_report_csv(const std::vector<ReconReport>& reports, const std::filesystem::path& path, bool baseline) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "R,sequence,nmse,ssim,psnr\n";
  for (const auto& rep : reports) {
    const auto r = fmt(rep.r);
    const auto& rows = baseline ? rep.zero_filled : rep.recon;
    const auto& sum = baseline ? rep.zero_filled_summary : rep.recon_summary;
    for (const auto& m : rows) os << r << ',' << m.sequence << ',' << fmt(m.nmse) << ',' << fmt(m.ssim) << ',' << fmt_psnr(m.psnr) << '\n';
    os << r << ",mean," << fmt(sum.nmse.mean) << ',' << fmt(sum.ssim.mean) << ',' << fmt_agg(sum.psnr) << '\n';
    os << r << ",std," << fmt(sum.nmse.std) << ',' << fmt(sum.ssim.std) << ',' << fmt_agg_std(sum.psnr) << '\n';
  }
  if (!os) throw IoError("write failed for " + path.string());
}

void write_summary_csv(const std::vector<ReconReport>& reports, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "R,nmse_mean,nmse_std,ssim_mean,ssim_std,psnr_mean,psnr_std,"
        "zf_nmse_mean,zf_ssim_mean,zf_psnr_mean,sequences,mask_seed,checkpoint\n";
  for (const auto& rep : reports) {
    const auto& s = rep.recon_summary;
    const auto& z = rep.zero_filled_summary;
    os << fmt(rep.r) << ',' << fmt(s.nmse.mean) << ',' << fmt(s.nmse.std) << ',' << fmt(s.ssim.mean) << ','
       << fmt(s.ssim.std) << ',' << fmt_agg(s.psnr) << ',' << fmt_agg_std(s.psnr) << ',' << fmt(z.nmse.mean) << ','
       << fmt(z.ssim.mean) << ',' << fmt_agg(z.psnr) << ',' << rep.recon.size() << ',' << rep.mask_seed << ','
       << rep.checkpoint_id << '\n';
  }
  if (!os) throw IoError("write failed for " + path.string());
}

std::vector<std::filesystem::path> write_pgm_frames(const kspace::ComplexVolume& image, const std::filesystem::path& dir,
                                                    const std::string& stem) {
  if (image.domain() != kspace::Domain::image) throw DimensionError("PGM export expects an image-domain volume");
  std::filesystem::create_directories(dir);
  const auto mag = image.magnitude();
  const std::size_t nx = image.x_dim(), ny = image.y_dim(), frame = nx * ny;
  std::vector<std::filesystem::path> paths;
  for (std::size_t t = 0; t < image.t_dim(); ++t) {
    const auto first = mag.begin() + std::ptrdiff_t(t * frame);
    const auto [lo, hi] = std::minmax_element(first, first + std::ptrdiff_t(frame));
    const double range = *hi - *lo;
    char name[64];
    std::snprintf(name, sizeof name, "_t%03zu.pgm", t);
    const auto path = dir / (stem + name);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    // Image rows are x, columns y.
    os << "P5\n" << ny << ' ' << nx << "\n255\n";
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t y = 0; y < ny; ++y) {
        const double v = mag[t * frame + x + nx * y];
        const double u = range > 0 ? (v - *lo) / range : 0.0;
        os.put(static_cast<char>(static_cast<unsigned char>(std::lround(u * 255.0))));
      }
    }
    if (!os) throw IoError("write failed for " + path.string());
    paths.push_back(path);
  }
  return paths;
}

template InferResult infer(const model::KspaceNetwork<float>&, const kspace::ComplexVolume&,
                           const sampling::SamplingMask&);
template InferResult infer(const model::KspaceNetwork<double>&, const kspace::ComplexVolume&,
                           const sampling::SamplingMask&);
template std::vector<ReconReport> evaluate(const model::KspaceNetwork<float>&, const Manifest&,
                                           const std::vector<double>&, std::uint64_t, const std::string&);
template std::vector<ReconReport> evaluate(const model::KspaceNetwork<double>&, const Manifest&,
                                           const std::vector<double>&, std::uint64_t, const std::string&);

}  // namespace kgin::pipeline
