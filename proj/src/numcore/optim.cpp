#include "kgin/numcore/optim.hpp"

#include <cmath>
#include <numbers>

#include "kgin/error.hpp"

namespace kgin::nc {

template <typename T>
Adam<T>::Adam(std::vector<NamedTensor<T>> params, AdamHyper hyper)
    : params_(std::move(params)), hyper_(hyper) {
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.numel(), T(0));
    v_.emplace_back(p.tensor.numel(), T(0));
  }
}

template <typename T>
void Adam<T>::step(double lr) {
  if (!(lr >= 0) || !std::isfinite(lr)) throw RangeError("adam: learning rate must be >= 0, got " + std::to_string(lr));
  for (const auto& p : params_) {
    for (auto g : p.tensor.grad()) {
      if (!std::isfinite(g)) throw TrainingError("adam: non-finite gradient in parameter '" + p.name + "'");
    }
  }
  ++step_;
  const double b1 = hyper_.beta1, b2 = hyper_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i].tensor;
    if (!p.has_grad()) continue;
    auto w = p.mutable_data();
    auto g = p.grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = T(b1 * m[j] + (1.0 - b1) * g[j]);
      v[j] = T(b2 * v[j] + (1.0 - b2) * double(g[j]) * g[j]);
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      w[j] = T(w[j] - lr * mhat / (std::sqrt(vhat) + hyper_.eps));
    }
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

template class Adam<float>;
template class Adam<double>;

void LrSchedule::validate() const {
  if (!(max_lr > 0)) throw RangeError("lr schedule: max_lr must be positive");
  if (total_steps < 1) throw RangeError("lr schedule: total_steps must be >= 1");
  if (!(warmup_fraction > 0 && warmup_fraction < 1)) throw RangeError("lr schedule: warmup_fraction must be in (0, 1)");
  if (!(initial_div >= 1) || !(final_div >= 1)) throw RangeError("lr schedule: divisors must be >= 1");
}

std::uint64_t LrSchedule::peak_step() const {
  const auto warm = static_cast<std::uint64_t>(std::llround(warmup_fraction * static_cast<double>(total_steps)));
  return warm == 0 ? 0 : warm - 1;
}

namespace {
double cosine_between(double start, double end, double pct) {
  return end + (start - end) * 0.5 * (1.0 + std::cos(std::numbers::pi * pct));
}
}  // namespace

double lr_at(const LrSchedule& s, std::uint64_t step) {
  s.validate();
  if (step >= s.total_steps) {
    throw RangeError("lr schedule: step " + std::to_string(step) + " outside [0, " + std::to_string(s.total_steps) + ")");
  }
  const std::uint64_t peak = s.peak_step();
  const double initial = s.max_lr / s.initial_div;
  const double final_lr = s.max_lr / s.final_div;
  if (step <= peak) {
    // A one-step warmup degenerates to starting at the peak.
    if (peak == 0) return s.max_lr;
    return cosine_between(initial, s.max_lr, double(step) / double(peak));
  }
  const double span = double(s.total_steps - 1 - peak);
  return cosine_between(s.max_lr, final_lr, double(step - peak) / span);
}

}  // namespace kgin::nc
