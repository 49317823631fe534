#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "kgin/kspace/volume.hpp"
#include "kgin/model/config.hpp"
#include "kgin/model/layers.hpp"
#include "kgin/sampling/mask.hpp"

namespace kgin::model {

using Coords = std::vector<std::pair<std::size_t, std::size_t>>;

/// Projected tokens on one plane. Row i of `tokens` belongs to `coords[i]`.
/// ky-t coords are (ky, t), kx-t are (kx, t), kx-ky are (patch kx, patch ky).
template <typename T>
struct TokenBatch {
  Tensor<T> tokens;  // [N, d]
  Coords coords;
  Plane plane = Plane::ky_t;
};

template <typename T>
struct ForwardResult {
  Tensor<T> interpolated;               // k-GIN estimate
  std::array<Tensor<T>, 3> refined;     // after each k-IRM stage
};

/// Volume <-> network layout: [T, Y, X, 2] row-major, (re, im) innermost.
template <typename T>
Tensor<T> to_tensor(const kspace::ComplexVolume& v);
template <typename T>
kspace::ComplexVolume to_volume(const Tensor<T>& t, kspace::Domain domain, double scale = 1.0);

/// Flat-index maps from the [T, Y, X, 2] layout to the raw token matrix of a
/// plane ([N, C] row-major), and back.
struct PlaneLayout {
  Plane plane;
  std::size_t tokens;    // N
  std::size_t channels;  // C
  nc::Index to_tokens;   // raw[i] = volume[to_tokens[i]]
  nc::Index to_volume;   // volume[j] = raw[to_volume[j]]
  Coords coords;
};

PlaneLayout make_plane_layout(Plane plane, std::size_t x, std::size_t y, std::size_t t, std::size_t patch);

/// k-space Transformer interpolator: masked encoder/decoder over ky-t tokens
/// followed by three residual refinement blocks on orthogonal planes.
template <typename T>
class KspaceNetwork {
 public:
  KspaceNetwork(ModelConfig config, std::uint64_t seed);

  KspaceNetwork(const KspaceNetwork&) = delete;
  KspaceNetwork& operator=(const KspaceNetwork&) = delete;
  KspaceNetwork(KspaceNetwork&&) = default;
  KspaceNetwork& operator=(KspaceNetwork&&) = default;

  const ModelConfig& config() const { return config_; }
  const std::vector<NamedTensor<T>>& parameters() const { return params_; }
  std::size_t parameter_count() const;
  Tensor<T> parameter(const std::string& name) const;

  /// All Y*T ky-t tokens of a [T, Y, X, 2] k-space tensor.
  TokenBatch<T> tokenize_kyt(const Tensor<T>& k) const;
  /// Rows of `batch` at `coords` (which must all be present).
  TokenBatch<T> select(const TokenBatch<T>& batch, const Coords& coords) const;

  /// Encoder over sampled tokens only; returns features [N_s, d].
  Tensor<T> encode(const TokenBatch<T>& sampled) const;
  /// Fills `unsampled` with the mask token, runs the decoder over the full
  /// grid and projects back to a [T, Y, X, 2] estimate.
  Tensor<T> decode(const Tensor<T>& features, const Coords& sampled, const Coords& unsampled) const;

  /// Three residual refinement stages; disabled planes pass through.
  std::array<Tensor<T>, 3> refine(const Tensor<T>& interpolated) const;

  /// Full forward pass on masked k-space in network layout.
  ForwardResult<T> forward(const Tensor<T>& masked, const sampling::SamplingMask& mask) const;

  /// Observes every attention matrix. Test and diagnostics hook.
  AttentionProbe<T> attention_probe;

 private:
  struct RefineBlock {
    Plane plane;
    PlaneLayout layout;
    Tensor<T> position;  // [N, d], fixed
    Linear<T> proj_in;
    TransformerStack<T> stack;
    Linear<T> proj_out;  // zero-initialized residual head
  };

  Tensor<T> refine_stage(const RefineBlock& block, const Tensor<T>& volume) const;

  ModelConfig config_;
  std::vector<NamedTensor<T>> params_;
  Tensor<T> kyt_position_;  // [Y*T, d], row t*Y + ky
  Linear<T> proj_in_;
  TransformerStack<T> encoder_;
  TransformerStack<T> decoder_;
  Tensor<T> mask_token_;  // [1, d]
  Linear<T> proj_out_;
  std::vector<RefineBlock> blocks_;
};

}  // namespace kgin::model
