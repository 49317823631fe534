#include "kgin/pipeline/train.hpp"

#include <cstdio>
#include <fstream>
#include <random>

#include "kgin/error.hpp"
#include "kgin/model/checkpoint.hpp"
#include "kgin/model/losses.hpp"
#include "kgin/pipeline/recon.hpp"
#include "kgin/sampling/mask.hpp"

namespace kgin::pipeline {

void TrainRunConfig::validate() const {
  model.validate();
  if (!(r_train > 1.0)) throw ConfigError("R_train must be > 1");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (log_interval < 1) throw ConfigError("log_interval must be >= 1");
  auto s = schedule;
  s.total_steps = steps;
  try {
    s.validate();
  } catch (const RangeError& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

template <typename T>
std::vector<LossRecord> train_network(model::KspaceNetwork<T>& net, const std::vector<kspace::ComplexVolume>& sequences,
                                      const TrainOptions& options) {
  if (options.steps < 1) throw ConfigError("steps must be >= 1");
  if (!(options.r_train > 1.0)) throw ConfigError("R_train must be > 1");
  if (sequences.empty()) throw DegenerateInputError("no training sequences");
  const auto& cfg = net.config();
  for (const auto& k : sequences) {
    if (k.x_dim() != cfg.x || k.y_dim() != cfg.y || k.t_dim() != cfg.t) {
      throw DimensionError("training sequence dims do not match the model config (" + cfg.describe() + ")");
    }
    if (k.domain() != kspace::Domain::kspace) throw DimensionError("training sequences must be k-space volumes");
  }
  auto schedule = options.schedule;
  schedule.total_steps = options.steps;
  schedule.validate();

  nc::Adam<T> adam(net.parameters());
  std::mt19937_64 pick(derive_seed(options.seed, 1));
  std::uniform_int_distribution<std::size_t> which(0, sequences.size() - 1);

  std::vector<LossRecord> log;
  log.reserve(options.steps);
  for (std::uint64_t step = 0; step < options.steps; ++step) {
    const auto& k = sequences[sequences.size() == 1 ? 0 : which(pick)];
    const auto mask = sampling::generate_mask(cfg.y, cfg.t, options.r_train, derive_seed(options.seed, 2 + step));
    const auto [input, target] = normalized_pair(k, mask);

    LossRecord rec;
    rec.step = step;
    rec.lr = nc::lr_at(schedule, step);
    try {
      const auto out = net.forward(model::to_tensor<T>(input), mask);
      auto terms = model::total_loss(out.interpolated, out.refined, model::to_tensor<T>(target), cfg.loss_weight_hdr,
                                     cfg.hdr_eps);
      rec.l1 = terms.l1.item();
      rec.hdr = terms.hdr.item();
      rec.total = terms.total.item();
      terms.total.backward();
      adam.step(rec.lr);
      adam.zero_grad();
    } catch (const NumericError& e) {
      adam.zero_grad();
      throw TrainingError("non-finite values at step " + std::to_string(step) + ": " + e.what());
    }
    log.push_back(rec);
    if (options.on_step) options.on_step(rec);
  }
  return log;
}

TrainResult train(const TrainRunConfig& cfg, const Manifest& manifest,
                  const std::function<void(const LossRecord&)>& on_step) {
  cfg.validate();
  std::vector<kspace::ComplexVolume> sequences;
  for (const auto& e : manifest.split("train")) sequences.push_back(manifest.load_kspace(e));
  if (sequences.empty()) throw DegenerateInputError("manifest has no train sequences");

  TrainResult result{model::KspaceNetwork<float>(cfg.model, derive_seed(cfg.seed, 0)), {}};
  TrainOptions options;
  options.r_train = cfg.r_train;
  options.steps = cfg.steps;
  options.seed = cfg.seed;
  options.schedule = cfg.schedule;
  options.on_step = on_step;
  result.log = train_network(result.network, sequences, options);

  if (!cfg.loss_log.empty()) write_loss_csv(result.log, cfg.log_interval, cfg.loss_log);
  if (!cfg.checkpoint.empty()) model::save_params(result.network, cfg.checkpoint);
  return result;
}

TrainResult train(const TrainRunConfig& cfg, const std::function<void(const LossRecord&)>& on_step) {
  return train(cfg, Manifest::read(cfg.manifest), on_step);
}

void write_loss_csv(const std::vector<LossRecord>& log, std::uint64_t interval, const std::filesystem::path& path) {
  if (interval < 1) throw ConfigError("log interval must be >= 1");
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "step,lr,l1,hdr,total\n";
  char line[160];
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& r = log[i];
    if (r.step % interval != 0 && i + 1 != log.size()) continue;
    std::snprintf(line, sizeof line, "%llu,%.9g,%.9g,%.9g,%.9g\n", static_cast<unsigned long long>(r.step), r.lr, r.l1,
                  r.hdr, r.total);
    os << line;
  }
  if (!os) throw IoError("write failed for " + path.string());
}

template std::vector<LossRecord> train_network(model::KspaceNetwork<float>&, const std::vector<kspace::ComplexVolume>&,
                                               const TrainOptions&);
template std::vector<LossRecord> train_network(model::KspaceNetwork<double>&, const std::vector<kspace::ComplexVolume>&,
                                               const TrainOptions&);

}  // namespace kgin::pipeline
