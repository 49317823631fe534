#include "kgin/model/network.hpp"

#include <algorithm>

#include "kgin/error.hpp"

namespace kgin::model {

template <typename T>
Tensor<T> to_tensor(const kspace::ComplexVolume& v) {
  const std::size_t X = v.x_dim(), Y = v.y_dim(), Tn = v.t_dim();
  std::vector<T> data(v.size() * 2);
  for (std::size_t i = 0; i < v.size(); ++i) {
    // Volume and network layouts share the (t, y, x) ordering.
    data[2 * i] = T(v.re()[i]);
    data[2 * i + 1] = T(v.im()[i]);
  }
  return Tensor<T>::from_data({Tn, Y, X, 2}, std::move(data));
}

template <typename T>
kspace::ComplexVolume to_volume(const Tensor<T>& t, kspace::Domain domain, double scale) {
  if (t.rank() != 4 || t.dim(3) != 2) throw DimensionError("expected a [T, Y, X, 2] tensor, got " + nc::to_string(t.shape()));
  const std::size_t Tn = t.dim(0), Y = t.dim(1), X = t.dim(2);
  const std::size_t n = X * Y * Tn;
  std::vector<double> re(n), im(n);
  const auto d = t.data();
  for (std::size_t i = 0; i < n; ++i) {
    re[i] = double(d[2 * i]);
    im[i] = double(d[2 * i + 1]);
  }
  return kspace::ComplexVolume(X, Y, Tn, domain, std::move(re), std::move(im), scale);
}

PlaneLayout make_plane_layout(Plane plane, std::size_t x, std::size_t y, std::size_t t, std::size_t patch) {
  auto vol = [&](std::size_t tt, std::size_t ky, std::size_t kx, std::size_t c) {
    return static_cast<std::uint32_t>(((tt * y + ky) * x + kx) * 2 + c);
  };
  PlaneLayout L;
  L.plane = plane;
  switch (plane) {
    case Plane::ky_t:
      L.tokens = t * y;
      L.channels = 2 * x;
      L.to_tokens.resize(L.tokens * L.channels);
      for (std::size_t i = 0; i < L.to_tokens.size(); ++i) L.to_tokens[i] = static_cast<std::uint32_t>(i);
      for (std::size_t tt = 0; tt < t; ++tt)
        for (std::size_t ky = 0; ky < y; ++ky) L.coords.emplace_back(ky, tt);
      break;
    case Plane::kx_t:
      L.tokens = t * x;
      L.channels = 2 * y;
      L.to_tokens.resize(L.tokens * L.channels);
      for (std::size_t tt = 0; tt < t; ++tt)
        for (std::size_t kx = 0; kx < x; ++kx) {
          L.coords.emplace_back(kx, tt);
          for (std::size_t ky = 0; ky < y; ++ky)
            for (std::size_t c = 0; c < 2; ++c)
              L.to_tokens[(tt * x + kx) * L.channels + 2 * ky + c] = vol(tt, ky, kx, c);
        }
      break;
    case Plane::kx_ky: {
      if (patch == 0 || x % patch || y % patch) throw ConfigError("patch size must divide X and Y");
      const std::size_t px_n = x / patch, py_n = y / patch;
      L.tokens = px_n * py_n;
      L.channels = 2 * patch * patch * t;
      L.to_tokens.resize(L.tokens * L.channels);
      for (std::size_t py = 0; py < py_n; ++py)
        for (std::size_t px = 0; px < px_n; ++px) {
          const std::size_t row = py * px_n + px;
          L.coords.emplace_back(px, py);
          for (std::size_t tt = 0; tt < t; ++tt)
            for (std::size_t dy = 0; dy < patch; ++dy)
              for (std::size_t dx = 0; dx < patch; ++dx)
                for (std::size_t c = 0; c < 2; ++c)
                  L.to_tokens[row * L.channels + ((tt * patch + dy) * patch + dx) * 2 + c] =
                      vol(tt, py * patch + dy, px * patch + dx, c);
        }
      break;
    }
  }
  L.to_volume.resize(L.to_tokens.size());
  for (std::size_t i = 0; i < L.to_tokens.size(); ++i) L.to_volume[L.to_tokens[i]] = static_cast<std::uint32_t>(i);
  return L;
}

template <typename T>
KspaceNetwork<T>::KspaceNetwork(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  const auto& c = config_;
  const std::size_t d = c.embed_dim;
  ParamFactory<T> f(params_, seed);

  const auto kyt = make_plane_layout(Plane::ky_t, c.x, c.y, c.t, c.kirm_patch);
  kyt_position_ = Tensor<T>::from_data({kyt.tokens, d}, sincos_embedding_2d<T>(d, kyt.coords));
  proj_in_ = Linear<T>::make(f, "kgin.proj_in", 2 * c.x, d);
  encoder_ = TransformerStack<T>::make(f, "kgin.encoder", d, c.n_heads, c.n_layers, c.mlp_ratio);
  decoder_ = TransformerStack<T>::make(f, "kgin.decoder", d, c.n_heads, c.n_layers, c.mlp_ratio);
  mask_token_ = f.constant("kgin.mask_token", {1, d}, T(0));
  // Zero start: the first estimate is the zero-filled one, not O(0.1) noise
  // on data whose typical magnitude is ~1e-2.
  proj_out_ = Linear<T>::make(f, "kgin.proj_out", d, 2 * c.x, true);

  for (Plane p : kAllPlanes) {
    if (!c.plane_enabled(p)) continue;
    const std::string name = std::string("kirm.") + to_string(p);
    RefineBlock b{p, make_plane_layout(p, c.x, c.y, c.t, c.kirm_patch), {}, {}, {}, {}};
    b.position = Tensor<T>::from_data({b.layout.tokens, d}, sincos_embedding_2d<T>(d, b.layout.coords));
    b.proj_in = Linear<T>::make(f, name + ".proj_in", b.layout.channels, d);
    b.stack = TransformerStack<T>::make(f, name + ".stack", d, c.n_heads, c.n_layers, c.mlp_ratio);
    b.proj_out = Linear<T>::make(f, name + ".proj_out", d, b.layout.channels, /*zero_init=*/true);
    blocks_.push_back(std::move(b));
  }
}

template <typename T>
std::size_t KspaceNetwork<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

template <typename T>
Tensor<T> KspaceNetwork<T>::parameter(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return p.tensor;
  throw ConfigError("no parameter named '" + name + "'");
}

template <typename T>
TokenBatch<T> KspaceNetwork<T>::tokenize_kyt(const Tensor<T>& k) const {
  const auto& c = config_;
  if (k.shape() != nc::Shape{c.t, c.y, c.x, 2}) {
    throw DimensionError("tokenize_kyt: expected " + nc::to_string({c.t, c.y, c.x, 2}) + ", got " +
                         nc::to_string(k.shape()));
  }
  const auto raw = nc::reshape(k, {c.t * c.y, 2 * c.x});
  TokenBatch<T> out;
  out.tokens = nc::add(proj_in_(raw), kyt_position_);
  out.plane = Plane::ky_t;
  for (std::size_t t = 0; t < c.t; ++t)
    for (std::size_t ky = 0; ky < c.y; ++ky) out.coords.emplace_back(ky, t);
  return out;
}

template <typename T>
TokenBatch<T> KspaceNetwork<T>::select(const TokenBatch<T>& batch, const Coords& coords) const {
  if (coords.empty()) throw DegenerateInputError("select: no coordinates requested");
  std::size_t max_a = 0, max_b = 0;
  for (const auto& [a, b] : batch.coords) {
    max_a = std::max(max_a, a);
    max_b = std::max(max_b, b);
  }
  const std::size_t width = max_a + 1;
  std::vector<std::int64_t> row_of((max_a + 1) * (max_b + 1), -1);
  for (std::size_t i = 0; i < batch.coords.size(); ++i)
    row_of[batch.coords[i].second * width + batch.coords[i].first] = static_cast<std::int64_t>(i);

  const std::size_t d = batch.tokens.dim(1);
  nc::Index idx(coords.size() * d);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const auto [a, b] = coords[i];
    const std::int64_t r = (a <= max_a && b <= max_b) ? row_of[b * width + a] : -1;
    if (r < 0) throw PartitionError("select: coordinate (" + std::to_string(a) + "," + std::to_string(b) + ") not in batch");
    for (std::size_t j = 0; j < d; ++j) idx[i * d + j] = static_cast<std::uint32_t>(std::size_t(r) * d + j);
  }
  return {nc::gather(batch.tokens, std::move(idx), {coords.size(), d}), coords, batch.plane};
}

template <typename T>
Tensor<T> KspaceNetwork<T>::encode(const TokenBatch<T>& sampled) const {
  if (!sampled.tokens.defined() || sampled.coords.empty()) throw DegenerateInputError("encode: no sampled tokens");
  return encoder_.forward(sampled.tokens, attention_probe);
}

template <typename T>
Tensor<T> KspaceNetwork<T>::decode(const Tensor<T>& features, const Coords& sampled, const Coords& unsampled) const {
  const auto& c = config_;
  const std::size_t d = c.embed_dim;
  const std::size_t grid = c.y * c.t;
  if (sampled.empty()) throw PartitionError("decode: no sampled coordinates");
  if (features.rank() != 2 || features.dim(0) != sampled.size() || features.dim(1) != d) {
    throw DimensionError("decode: features " + nc::to_string(features.shape()) + " for " +
                         std::to_string(sampled.size()) + " sampled coordinates");
  }
  // Sequence row feeding each ky-t grid cell; the two coordinate sets must
  // cover the grid exactly once.
  std::vector<std::int64_t> seq_row(grid, -1);
  auto claim = [&](const Coords& coords, std::size_t offset) {
    for (std::size_t i = 0; i < coords.size(); ++i) {
      const auto [ky, t] = coords[i];
      if (ky >= c.y || t >= c.t) throw PartitionError("decode: coordinate outside the ky-t grid");
      auto& slot = seq_row[t * c.y + ky];
      if (slot >= 0) {
        throw PartitionError("decode: coordinate (" + std::to_string(ky) + "," + std::to_string(t) + ") appears twice");
      }
      slot = static_cast<std::int64_t>(offset + i);
    }
  };
  claim(sampled, 0);
  claim(unsampled, sampled.size());
  if (std::find(seq_row.begin(), seq_row.end(), -1) != seq_row.end()) {
    throw PartitionError("decode: sampled and unsampled coordinates leave gaps in the ky-t grid");
  }

  Tensor<T> sequence = features;
  if (!unsampled.empty()) {
    const std::size_t nu = unsampled.size();
    nc::Index broadcast(nu * d), pos_rows(nu * d);
    for (std::size_t i = 0; i < nu; ++i) {
      const auto [ky, t] = unsampled[i];
      for (std::size_t j = 0; j < d; ++j) {
        broadcast[i * d + j] = static_cast<std::uint32_t>(j);
        pos_rows[i * d + j] = static_cast<std::uint32_t>((t * c.y + ky) * d + j);
      }
    }
    const auto fill = nc::add(nc::gather(mask_token_, std::move(broadcast), {nu, d}),
                              nc::gather(kyt_position_, std::move(pos_rows), {nu, d}));
    sequence = nc::concat_rows(features, fill);
  }
  nc::Index order(grid * d);
  for (std::size_t g = 0; g < grid; ++g)
    for (std::size_t j = 0; j < d; ++j) order[g * d + j] = static_cast<std::uint32_t>(std::size_t(seq_row[g]) * d + j);
  const auto ordered = nc::gather(sequence, std::move(order), {grid, d});

  const auto decoded = decoder_.forward(ordered, attention_probe);
  return nc::reshape(proj_out_(decoded), {c.t, c.y, c.x, 2});
}

template <typename T>
Tensor<T> KspaceNetwork<T>::refine_stage(const RefineBlock& block, const Tensor<T>& volume) const {
  const auto& L = block.layout;
  const bool identity_layout = block.plane == Plane::ky_t;
  const auto raw = identity_layout ? nc::reshape(volume, {L.tokens, L.channels})
                                   : nc::gather(volume, L.to_tokens, {L.tokens, L.channels});
  const auto h = block.stack.forward(nc::add(block.proj_in(raw), block.position), attention_probe);
  const auto out = block.proj_out(h);
  const auto residual = identity_layout ? nc::reshape(out, volume.shape()) : nc::gather(out, L.to_volume, volume.shape());
  return nc::add(volume, residual);
}

template <typename T>
std::array<Tensor<T>, 3> KspaceNetwork<T>::refine(const Tensor<T>& interpolated) const {
  const auto& c = config_;
  if (interpolated.shape() != nc::Shape{c.t, c.y, c.x, 2}) {
    throw DimensionError("refine: expected " + nc::to_string({c.t, c.y, c.x, 2}) + ", got " +
                         nc::to_string(interpolated.shape()));
  }
  std::array<Tensor<T>, 3> stages;
  Tensor<T> current = interpolated;
  for (std::size_t i = 0; i < kAllPlanes.size(); ++i) {
    const auto it = std::find_if(blocks_.begin(), blocks_.end(), [&](const RefineBlock& b) { return b.plane == kAllPlanes[i]; });
    if (it != blocks_.end()) current = refine_stage(*it, current);
    stages[i] = current;
  }
  return stages;
}

template <typename T>
ForwardResult<T> KspaceNetwork<T>::forward(const Tensor<T>& masked, const sampling::SamplingMask& mask) const {
  const auto& c = config_;
  if (mask.y_dim() != c.y || mask.t_dim() != c.t) {
    throw DimensionError("forward: mask " + std::to_string(mask.y_dim()) + "x" + std::to_string(mask.t_dim()) +
                         " does not match model Y x T " + std::to_string(c.y) + "x" + std::to_string(c.t));
  }
  const auto sampled = mask.sampled_coords();
  const auto unsampled = mask.unsampled_coords();
  const auto tokens = tokenize_kyt(masked);
  const auto features = encode(select(tokens, sampled));
  ForwardResult<T> out;
  out.interpolated = decode(features, sampled, unsampled);
  out.refined = refine(out.interpolated);
  return out;
}

template class KspaceNetwork<float>;
template class KspaceNetwork<double>;
template Tensor<float> to_tensor<float>(const kspace::ComplexVolume&);
template Tensor<double> to_tensor<double>(const kspace::ComplexVolume&);
template kspace::ComplexVolume to_volume<float>(const Tensor<float>&, kspace::Domain, double);
template kspace::ComplexVolume to_volume<double>(const Tensor<double>&, kspace::Domain, double);

}  // namespace kgin::model
