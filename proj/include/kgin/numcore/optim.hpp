#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kgin/numcore/tensor.hpp"

namespace kgin::nc {

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam over a fixed list of named parameters.
template <typename T>
class Adam {
 public:
  Adam(std::vector<NamedTensor<T>> params, AdamHyper hyper = {});

  /// One update at learning rate `lr` (>= 0) from the grads currently held by
  /// the parameters. Throws TrainingError naming the parameter on a NaN grad.
  void step(double lr);
  void zero_grad();

  std::uint64_t steps_taken() const { return step_; }
  const AdamHyper& hyper() const { return hyper_; }
  std::span<const T> first_moment(std::size_t i) const { return m_[i]; }
  std::span<const T> second_moment(std::size_t i) const { return v_[i]; }

 private:
  std::vector<NamedTensor<T>> params_;
  AdamHyper hyper_;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
  std::uint64_t step_ = 0;
};

/// One-cycle schedule: cosine warmup from max_lr/initial_div to max_lr, then
/// cosine anneal to max_lr/final_div.
struct LrSchedule {
  double max_lr = 1e-4;
  std::uint64_t total_steps = 1;
  double warmup_fraction = 0.3;
  double initial_div = 25.0;
  double final_div = 1e4;

  void validate() const;
  /// Last step of the warmup phase; lr_at(peak_step()) == max_lr.
  std::uint64_t peak_step() const;
};

double lr_at(const LrSchedule& schedule, std::uint64_t step);

}  // namespace kgin::nc
