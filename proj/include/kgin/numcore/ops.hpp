#pragma once

#include <cstdint>
#include <vector>

#include "kgin/numcore/tensor.hpp"

namespace kgin::nc {

using Index = std::vector<std::uint32_t>;

// Elementwise, identical shapes.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T s);

/// a[..., D] + bias[D], broadcast over the leading axes.
template <typename T> Tensor<T> add_bias(const Tensor<T>& a, const Tensor<T>& bias);

/// Batched matrix product a[..., M, K] @ b[..., K, N]. `b` may also be a
/// plain [K, N] matrix shared by every batch entry.
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

/// Batched a[..., M, K] @ b[..., N, K]^T.
template <typename T> Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b);

/// out.flat[i] = x.flat[index[i]], shaped as `shape`. Backward scatter-adds,
/// so repeated indices (broadcasts) are allowed.
template <typename T> Tensor<T> gather(const Tensor<T>& x, Index index, Shape shape);

template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);

/// Stacks a[Na, D] on top of b[Nb, D].
template <typename T> Tensor<T> concat_rows(const Tensor<T>& a, const Tensor<T>& b);

inline constexpr double kLayerNormEps = 1e-5;

template <typename T>
Tensor<T> layernorm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias);

/// tanh approximation.
template <typename T> Tensor<T> gelu(const Tensor<T>& x);

template <typename T> Tensor<T> softmax_lastaxis(const Tensor<T>& x);

template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> mean(const Tensor<T>& x);

/// mean(|a - b|). Subgradient 0 at the kink.
template <typename T> Tensor<T> l1_mean(const Tensor<T>& a, const Tensor<T>& b);

/// mean(((est - target) / (|est| + eps))^2) where the denominator is taken
/// from the value of `est` and receives no gradient.
template <typename T>
Tensor<T> relative_sq_mean(const Tensor<T>& est, const Tensor<T>& target, T eps);

}  // namespace kgin::nc
