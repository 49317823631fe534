#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "kgin/model/network.hpp"
#include "kgin/numcore/optim.hpp"
#include "kgin/pipeline/manifest.hpp"

namespace kgin::pipeline {

struct TrainRunConfig {
  model::ModelConfig model;  // also carries the HDR weight and eps
  std::filesystem::path manifest;
  double r_train = 4.0;
  std::uint64_t steps = 200;
  std::uint64_t seed = 0;
  std::filesystem::path checkpoint;  // empty: not written
  std::filesystem::path loss_log;    // empty: not written
  std::uint64_t log_interval = 1;
  nc::LrSchedule schedule;  // total_steps is taken from `steps`

  /// Throws ConfigError: R_train > 1, steps >= 1, log_interval >= 1.
  void validate() const;
};

struct LossRecord {
  std::uint64_t step = 0;
  double lr = 0;
  double l1 = 0;
  double hdr = 0;
  double total = 0;
};

struct TrainOptions {
  double r_train = 4.0;
  std::uint64_t steps = 200;
  std::uint64_t seed = 0;
  nc::LrSchedule schedule;
  std::function<void(const LossRecord&)> on_step;
};

/// Batch-size-1 loop: pick a sequence, draw a fresh mask, normalize by the
/// masked data's peak, forward, total loss, backward, Adam at lr_at(step).
/// Returns one record per step.
template <typename T>
std::vector<LossRecord> train_network(model::KspaceNetwork<T>& net, const std::vector<kspace::ComplexVolume>& sequences,
                                      const TrainOptions& options);

struct TrainResult {
  model::KspaceNetwork<float> network;
  std::vector<LossRecord> log;
};

/// Trains on the manifest's train split only; writes checkpoint and loss CSV
/// when the paths are set.
TrainResult train(const TrainRunConfig& cfg, const Manifest& manifest,
                  const std::function<void(const LossRecord&)>& on_step = {});
TrainResult train(const TrainRunConfig& cfg, const std::function<void(const LossRecord&)>& on_step = {});

/// `step,lr,l1,hdr,total`, every `interval`-th step plus the last.
void write_loss_csv(const std::vector<LossRecord>& log, std::uint64_t interval, const std::filesystem::path& path);

/// Stateless 64-bit mixer used to derive per-purpose seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace kgin::pipeline
