#include "kgin/model/config.hpp"

#include <sstream>

#include "kgin/error.hpp"

namespace kgin::model {

const char* to_string(Plane p) {
  switch (p) {
    case Plane::ky_t: return "ky_t";
    case Plane::kx_t: return "kx_t";
    case Plane::kx_ky: return "kx_ky";
  }
  return "?";
}

ModelConfig ModelConfig::full(std::size_t x, std::size_t y, std::size_t t) {
  ModelConfig c;
  c.embed_dim = 512;
  c.n_heads = 8;
  c.n_layers = 8;
  c.x = x;
  c.y = y;
  c.t = t;
  return c;
}

ModelConfig ModelConfig::tiny(std::size_t x, std::size_t y, std::size_t t) {
  ModelConfig c;
  c.x = x;
  c.y = y;
  c.t = t;
  return c;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("model config: " + m); };
  if (embed_dim == 0 || n_heads == 0 || n_layers == 0 || mlp_ratio == 0) fail("sizes must be positive");
  if (embed_dim % n_heads != 0) fail("embed_dim must be divisible by n_heads");
  // Half the embedding per plane axis, each half split into sin and cos.
  if (embed_dim % 4 != 0) fail("embed_dim must be divisible by 4");
  if (x == 0 || y == 0 || t == 0) fail("volume dims must be positive");
  if (kirm_patch == 0 || x % kirm_patch != 0 || y % kirm_patch != 0) fail("kirm_patch must divide X and Y");
  if (!(loss_weight_hdr >= 0)) fail("loss_weight_hdr must be >= 0");
  if (!(hdr_eps > 0)) fail("hdr_eps must be > 0");
}

std::string ModelConfig::describe() const {
  std::ostringstream os;
  os << "d=" << embed_dim << " heads=" << n_heads << " layers=" << n_layers << " mlp_ratio=" << mlp_ratio
     << " dims=" << x << 'x' << y << 'x' << t << " patch=" << kirm_patch << " planes=";
  for (auto p : kAllPlanes) os << (plane_enabled(p) ? '1' : '0');
  os << " lambda=" << loss_weight_hdr << " eps=" << hdr_eps;
  return os.str();
}

}  // namespace kgin::model
