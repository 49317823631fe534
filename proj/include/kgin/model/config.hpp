#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>

namespace kgin::model {

/// Token planes. k-IRM refines on all three, in this order.
enum class Plane : std::uint8_t { ky_t = 0, kx_t = 1, kx_ky = 2 };

inline constexpr std::array<Plane, 3> kAllPlanes{Plane::ky_t, Plane::kx_t, Plane::kx_ky};

const char* to_string(Plane p);

struct ModelConfig {
  std::size_t embed_dim = 32;
  std::size_t n_heads = 4;
  std::size_t n_layers = 2;
  std::size_t mlp_ratio = 4;
  std::size_t x = 32, y = 32, t = 8;
  std::size_t kirm_patch = 4;
  std::array<bool, 3> kirm_planes{true, true, true};
  double loss_weight_hdr = 1.0;  // lambda
  double hdr_eps = 0.5;

  /// 8 layers, 8 heads, 512 dims for every Transformer stack.
  static ModelConfig full(std::size_t x, std::size_t y, std::size_t t);
  /// Desk-scale preset: 32 dims, 4 heads, 2 layers.
  static ModelConfig tiny(std::size_t x, std::size_t y, std::size_t t);

  bool plane_enabled(Plane p) const { return kirm_planes[static_cast<std::size_t>(p)]; }
  std::size_t head_dim() const { return embed_dim / n_heads; }

  /// Throws ConfigError on any invariant violation.
  void validate() const;
  std::string describe() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace kgin::model
