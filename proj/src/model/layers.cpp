#include "kgin/model/layers.hpp"

#include <cmath>
#include <numbers>

#include "kgin/error.hpp"

namespace kgin::model {

template <typename T>
ParamFactory<T>::ParamFactory(std::vector<NamedTensor<T>>& registry, std::uint64_t seed)
    : registry_(registry), gen_(seed ^ 0xD1B54A32D192ED03ULL) {}

template <typename T>
double ParamFactory<T>::normal() {
  // Box-Muller on our own uniforms keeps draws identical across standard libraries.
  auto uniform = [this] { return (double(gen_() >> 11) + 0.5) * 0x1.0p-53; };
  const double u1 = uniform(), u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <typename T>
Tensor<T> ParamFactory<T>::trunc_normal(const std::string& name, nc::Shape shape) {
  constexpr double kStd = 0.02;
  std::vector<T> values(nc::numel(shape));
  for (auto& v : values) {
    double z = normal();
    while (std::abs(z) > 2.0) z = normal();
    v = T(kStd * z);
  }
  return add(name, std::move(shape), std::move(values));
}

template <typename T>
Tensor<T> ParamFactory<T>::constant(const std::string& name, nc::Shape shape, T value) {
  std::vector<T> values(nc::numel(shape), value);
  return add(name, std::move(shape), std::move(values));
}

template <typename T>
Tensor<T> ParamFactory<T>::add(const std::string& name, nc::Shape shape, std::vector<T> values) {
  auto t = Tensor<T>::from_data(std::move(shape), std::move(values), true);
  registry_.push_back({name, t});
  return t;
}

template <typename T>
Linear<T> Linear<T>::make(ParamFactory<T>& f, const std::string& name, std::size_t in, std::size_t out,
                          bool zero_init) {
  Linear l;
  l.weight = zero_init ? f.constant(name + ".weight", {in, out}, T(0)) : f.trunc_normal(name + ".weight", {in, out});
  l.bias = f.constant(name + ".bias", {out}, T(0));
  return l;
}

template <typename T>
LayerNorm<T> LayerNorm<T>::make(ParamFactory<T>& f, const std::string& name, std::size_t d) {
  return {f.constant(name + ".gain", {d}, T(1)), f.constant(name + ".bias", {d}, T(0))};
}

template <typename T>
Tensor<T> self_attention(const Tensor<T>& qkv, std::size_t n_heads, const AttentionProbe<T>& probe) {
  const std::size_t n = qkv.dim(0);
  const std::size_t d = qkv.dim(1) / 3;
  const std::size_t dh = d / n_heads;

  // Split [N, 3d] into per-head [H, N, dh] views of q, k and v.
  auto split = [&](std::size_t which) {
    nc::Index idx(n * d);
    for (std::size_t h = 0; h < n_heads; ++h)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dh; ++j)
          idx[(h * n + i) * dh + j] = static_cast<std::uint32_t>(i * 3 * d + which * d + h * dh + j);
    return nc::gather(qkv, std::move(idx), {n_heads, n, dh});
  };
  const auto q = nc::scale(split(0), T(1) / std::sqrt(T(dh)));
  const auto k = split(1);
  const auto v = split(2);
  const auto att = nc::softmax_lastaxis(nc::matmul_nt(q, k));
  if (probe) probe(att);
  const auto o = nc::matmul(att, v);

  nc::Index merge(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t h = 0; h < n_heads; ++h)
      for (std::size_t j = 0; j < dh; ++j)
        merge[i * d + h * dh + j] = static_cast<std::uint32_t>((h * n + i) * dh + j);
  return nc::gather(o, std::move(merge), {n, d});
}

template <typename T>
Tensor<T> TransformerLayer<T>::forward(const Tensor<T>& x, std::size_t n_heads, const AttentionProbe<T>& probe) const {
  const auto attended = proj(self_attention(qkv(ln1(x)), n_heads, probe));
  const auto h = nc::add(x, attended);
  return nc::add(h, fc2(nc::gelu(fc1(ln2(h)))));
}

template <typename T>
TransformerStack<T> TransformerStack<T>::make(ParamFactory<T>& f, const std::string& name, std::size_t d,
                                              std::size_t n_heads, std::size_t n_layers, std::size_t mlp_ratio) {
  TransformerStack s;
  s.n_heads = n_heads;
  for (std::size_t i = 0; i < n_layers; ++i) {
    const std::string p = name + ".layer" + std::to_string(i);
    TransformerLayer<T> layer;
    layer.ln1 = LayerNorm<T>::make(f, p + ".ln1", d);
    layer.qkv = Linear<T>::make(f, p + ".qkv", d, 3 * d);
    layer.proj = Linear<T>::make(f, p + ".proj", d, d);
    layer.ln2 = LayerNorm<T>::make(f, p + ".ln2", d);
    layer.fc1 = Linear<T>::make(f, p + ".fc1", d, mlp_ratio * d);
    layer.fc2 = Linear<T>::make(f, p + ".fc2", mlp_ratio * d, d);
    s.layers.push_back(std::move(layer));
  }
  s.norm = LayerNorm<T>::make(f, name + ".norm", d);
  return s;
}

template <typename T>
Tensor<T> TransformerStack<T>::forward(const Tensor<T>& x, const AttentionProbe<T>& probe) const {
  Tensor<T> h = x;
  for (const auto& layer : layers) h = layer.forward(h, n_heads, probe);
  return norm(h);
}

template <typename T>
std::vector<T> sincos_embedding_2d(std::size_t d, const std::vector<std::pair<std::size_t, std::size_t>>& ab) {
  const std::size_t half = d / 2;
  const std::size_t quarter = d / 4;
  std::vector<T> out(ab.size() * d);
  for (std::size_t r = 0; r < ab.size(); ++r) {
    const double pos[2] = {double(ab[r].first), double(ab[r].second)};
    for (std::size_t axis = 0; axis < 2; ++axis) {
      T* row = out.data() + r * d + axis * half;
      for (std::size_t i = 0; i < quarter; ++i) {
        const double omega = std::pow(10000.0, -double(i) / double(quarter));
        row[i] = T(std::sin(pos[axis] * omega));
        row[quarter + i] = T(std::cos(pos[axis] * omega));
      }
    }
  }
  return out;
}

#define KGIN_INSTANTIATE_LAYERS(T)                                                           \
  template class ParamFactory<T>;                                                            \
  template struct Linear<T>;                                                                 \
  template struct LayerNorm<T>;                                                              \
  template struct TransformerLayer<T>;                                                       \
  template struct TransformerStack<T>;                                                       \
  template Tensor<T> self_attention(const Tensor<T>&, std::size_t, const AttentionProbe<T>&); \
  template std::vector<T> sincos_embedding_2d<T>(std::size_t,                                 \
                                                 const std::vector<std::pair<std::size_t, std::size_t>>&);

KGIN_INSTANTIATE_LAYERS(float)
KGIN_INSTANTIATE_LAYERS(double)

}  // namespace kgin::model
