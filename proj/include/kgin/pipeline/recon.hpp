#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kgin/model/network.hpp"
#include "kgin/pipeline/manifest.hpp"
#include "kgin/pipeline/metrics.hpp"
#include "kgin/sampling/mask.hpp"

namespace kgin::pipeline {

/// Masked k-space divided by its peak magnitude, and the full k-space divided
/// by the same factor. Both carry that factor as their scale.
std::pair<kspace::ComplexVolume, kspace::ComplexVolume> normalized_pair(const kspace::ComplexVolume& k,
                                                                        const sampling::SamplingMask& mask);

struct InferResult {
  kspace::ComplexVolume input;             // masked, normalized network input
  kspace::ComplexVolume kspace_normalized;  // after data consistency
  kspace::ComplexVolume kspace;            // denormalized, in the input's units and scale
  kspace::ComplexVolume image;             // ifft2 of `kspace`
};

/// Masks `k`, normalizes, runs the network, re-inserts the sampled data,
/// denormalizes and transforms to the image domain.
template <typename T>
InferResult infer(const model::KspaceNetwork<T>& net, const kspace::ComplexVolume& k,
                  const sampling::SamplingMask& mask);

/// ifft2(apply_mask(k)).
kspace::ComplexVolume zero_filled(const kspace::ComplexVolume& k, const sampling::SamplingMask& mask);

MagnitudeVolume magnitude_of(const kspace::ComplexVolume& image);

struct SequenceMetrics {
  std::string sequence;
  double nmse = 0;
  double ssim = 0;
  std::optional<double> psnr;  // nullopt: exact match
};

struct Aggregate {
  double mean = 0;
  double std = 0;  // population
  bool infinite = false;
};

struct MetricSummary {
  Aggregate nmse, ssim, psnr;
};

MetricSummary summarize(const std::vector<SequenceMetrics>& rows);

SequenceMetrics measure(const std::string& name, const MagnitudeVolume& estimate, const MagnitudeVolume& reference);

struct ReconReport {
  double r = 0;
  std::uint64_t mask_seed = 0;
  std::string checkpoint_id;
  std::vector<SequenceMetrics> recon;
  std::vector<SequenceMetrics> zero_filled;
  MetricSummary recon_summary;
  MetricSummary zero_filled_summary;
};

/// Mask seed for sequence `index` at undersampling `r`.
std::uint64_t eval_mask_seed(std::uint64_t seed, double r, std::size_t index);

/// One report per R over the manifest's test split, reference = ifft2 of the
/// ground-truth k-space.
template <typename T>
std::vector<ReconReport> evaluate(const model::KspaceNetwork<T>& net, const Manifest& manifest,
                                  const std::vector<double>& r_list, std::uint64_t seed,
                                  const std::string& checkpoint_id = "");

/// `R,sequence,nmse,ssim,psnr` per sequence followed by mean and std rows.
void write_report_csv(const std::vector<ReconReport>& reports, const std::filesystem::path& path,
                      bool baseline = false);
/// One row per R with reconstruction and zero-filled aggregates.
void write_summary_csv(const std::vector<ReconReport>& reports, const std::filesystem::path& path);

/// One binary PGM per frame of |image|, each min-max scaled to 0..255.
std::vector<std::filesystem::path> write_pgm_frames(const kspace::ComplexVolume& image,
                                                    const std::filesystem::path& dir, const std::string& stem);

}  // namespace kgin::pipeline
