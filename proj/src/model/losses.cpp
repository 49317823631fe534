#include "kgin/model/losses.hpp"

#include "kgin/error.hpp"

namespace kgin::model {

template <typename T>
Tensor<T> l1_loss(const Tensor<T>& estimate, const Tensor<T>& target) {
  return nc::l1_mean(estimate, target);
}

template <typename T>
Tensor<T> hdr_loss(const std::array<Tensor<T>, 3>& stages, const Tensor<T>& target, double eps) {
  if (!(eps > 0)) throw ConfigError("hdr_loss: eps must be > 0");
  Tensor<T> sum = nc::relative_sq_mean(stages[0], target, T(eps));
  for (std::size_t i = 1; i < stages.size(); ++i) sum = nc::add(sum, nc::relative_sq_mean(stages[i], target, T(eps)));
  return sum;
}

template <typename T>
LossTerms<T> total_loss(const Tensor<T>& interpolated, const std::array<Tensor<T>, 3>& stages,
                        const Tensor<T>& target, double lambda, double eps) {
  if (!(lambda >= 0)) throw ConfigError("total_loss: lambda must be >= 0");
  LossTerms<T> out;
  out.l1 = l1_loss(interpolated, target);
  out.hdr = hdr_loss(stages, target, eps);
  out.total = nc::add(out.l1, nc::scale(out.hdr, T(lambda)));
  return out;
}

#define KGIN_INSTANTIATE_LOSSES(T)                                                                     \
  template Tensor<T> l1_loss(const Tensor<T>&, const Tensor<T>&);                                      \
  template Tensor<T> hdr_loss(const std::array<Tensor<T>, 3>&, const Tensor<T>&, double);              \
  template struct LossTerms<T>;                                                                        \
  template LossTerms<T> total_loss(const Tensor<T>&, const std::array<Tensor<T>, 3>&, const Tensor<T>&, \
                                   double, double);

KGIN_INSTANTIATE_LOSSES(float)
KGIN_INSTANTIATE_LOSSES(double)

}  // namespace kgin::model
