#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "kgin/numcore/ops.hpp"
#include "kgin/numcore/optim.hpp"

namespace kgin::model {

using nc::NamedTensor;
using nc::Tensor;

/// Called with every attention matrix [heads, N, N] produced by a forward pass.
template <typename T>
using AttentionProbe = std::function<void(const Tensor<T>&)>;

/// Registers parameters in construction order and draws their initial values.
template <typename T>
class ParamFactory {
 public:
  ParamFactory(std::vector<NamedTensor<T>>& registry, std::uint64_t seed);

  /// Truncated normal (std 0.02, cut at two std).
  Tensor<T> trunc_normal(const std::string& name, nc::Shape shape);
  Tensor<T> constant(const std::string& name, nc::Shape shape, T value);

 private:
  double normal();
  Tensor<T> add(const std::string& name, nc::Shape shape, std::vector<T> values);

  std::vector<NamedTensor<T>>& registry_;
  std::mt19937_64 gen_;
};

template <typename T>
struct Linear {
  Tensor<T> weight;  // [in, out]
  Tensor<T> bias;    // [out]

  static Linear make(ParamFactory<T>& f, const std::string& name, std::size_t in, std::size_t out,
                     bool zero_init = false);
  Tensor<T> operator()(const Tensor<T>& x) const { return nc::add_bias(nc::matmul(x, weight), bias); }
};

template <typename T>
struct LayerNorm {
  Tensor<T> gain, bias;

  static LayerNorm make(ParamFactory<T>& f, const std::string& name, std::size_t d);
  Tensor<T> operator()(const Tensor<T>& x) const { return nc::layernorm(x, gain, bias); }
};

/// Multi-head self-attention over a token sequence [N, d].
template <typename T>
Tensor<T> self_attention(const Tensor<T>& qkv, std::size_t n_heads, const AttentionProbe<T>& probe);

/// Pre-norm block: x + MHSA(LN(x)), then x + MLP(LN(x)) with GELU.
template <typename T>
struct TransformerLayer {
  LayerNorm<T> ln1;
  Linear<T> qkv;
  Linear<T> proj;
  LayerNorm<T> ln2;
  Linear<T> fc1;
  Linear<T> fc2;

  Tensor<T> forward(const Tensor<T>& x, std::size_t n_heads, const AttentionProbe<T>& probe) const;
};

/// `n_layers` Transformer layers followed by a final LayerNorm.
template <typename T>
struct TransformerStack {
  std::vector<TransformerLayer<T>> layers;
  LayerNorm<T> norm;
  std::size_t n_heads = 1;

  static TransformerStack make(ParamFactory<T>& f, const std::string& name, std::size_t d, std::size_t n_heads,
                               std::size_t n_layers, std::size_t mlp_ratio);
  Tensor<T> forward(const Tensor<T>& x, const AttentionProbe<T>& probe) const;
};

/// Fixed 2D sin-cos embedding rows: the first d/2 columns encode `a`, the
/// last d/2 encode `b`.
template <typename T>
std::vector<T> sincos_embedding_2d(std::size_t d, const std::vector<std::pair<std::size_t, std::size_t>>& ab);

}  // namespace kgin::model
