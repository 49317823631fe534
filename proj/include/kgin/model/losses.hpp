#pragma once

#include <array>

#include "kgin/numcore/ops.hpp"

namespace kgin::model {

using nc::Tensor;

/// Mean absolute error over every real entry of the k-space estimate.
template <typename T>
Tensor<T> l1_loss(const Tensor<T>& estimate, const Tensor<T>& target);

/// High-dynamic-range loss summed over refinement stages:
///   sum_i mean(((y_i - y) / (|sg(y_i)| + eps))^2)
/// where sg() blocks the gradient through the denominator.
template <typename T>
Tensor<T> hdr_loss(const std::array<Tensor<T>, 3>& stages, const Tensor<T>& target, double eps);

template <typename T>
struct LossTerms {
  Tensor<T> l1;
  Tensor<T> hdr;
  Tensor<T> total;  // l1 + lambda * hdr
};

template <typename T>
LossTerms<T> total_loss(const Tensor<T>& interpolated, const std::array<Tensor<T>, 3>& stages,
                        const Tensor<T>& target, double lambda, double eps);

}  // namespace kgin::model
