#include "kgin/numcore/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "kgin/error.hpp"

namespace kgin::nc {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using MutMap = Eigen::Map<RowMat<T>>;

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

template <typename T>
Tensor<T> make_op(const char* op, Shape shape, std::vector<T> data,
                  std::initializer_list<const Tensor<T>*> inputs,
                  std::function<void(const Node<T>&)> backward) {
  require_finite<T>(data, op);
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  if (grad_enabled()) {
    for (const auto* in : inputs) node->requires_grad = node->requires_grad || in->requires_grad();
  }
  if (node->requires_grad) {
    for (const auto* in : inputs) node->parents.push_back(in->node());
    node->backward = std::move(backward);
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

// Leading (batch) extent of a rank>=2 tensor.
template <typename T>
std::size_t batch_of(const Tensor<T>& t) {
  return t.numel() / (t.dim(-1) * t.dim(-2));
}

template <typename T>
Shape batch_shape(const Tensor<T>& t) {
  return Shape(t.shape().begin(), t.shape().end() - 2);
}

template <typename T, typename F>
Tensor<T> binary_elementwise(const char* op, const Tensor<T>& a, const Tensor<T>& b, F f,
                             T da_coef, T db_coef, bool product) {
  require_same_shape(a, b, op);
  std::vector<T> out(a.numel());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i], y[i]);
  NodePtr<T> pa = a.node(), pb = b.node();
  return make_op<T>(op, a.shape(), std::move(out), {&a, &b},
                    [pa, pb, da_coef, db_coef, product](const Node<T>& self) {
                      const auto& g = self.grad;
                      if (pa->requires_grad) {
                        auto ga = pa->grad_buffer();
                        for (std::size_t i = 0; i < g.size(); ++i)
                          ga[i] += product ? g[i] * pb->data[i] : da_coef * g[i];
                      }
                      if (pb->requires_grad) {
                        auto gb = pb->grad_buffer();
                        for (std::size_t i = 0; i < g.size(); ++i)
                          gb[i] += product ? g[i] * pa->data[i] : db_coef * g[i];
                      }
                    });
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_elementwise<T>("add", a, b, [](T x, T y) { return x + y; }, T(1), T(1), false);
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_elementwise<T>("sub", a, b, [](T x, T y) { return x - y; }, T(1), T(-1), false);
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_elementwise<T>("mul", a, b, [](T x, T y) { return x * y; }, T(0), T(0), true);
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  std::vector<T> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= s;
  NodePtr<T> pa = a.node();
  return make_op<T>("scale", a.shape(), std::move(out), {&a}, [pa, s](const Node<T>& self) {
    auto ga = pa->grad_buffer();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += s * self.grad[i];
  });
}

template <typename T>
Tensor<T> add_bias(const Tensor<T>& a, const Tensor<T>& bias) {
  const std::size_t d = a.dim(-1);
  if (bias.rank() != 1 || bias.dim(0) != d) {
    throw DimensionError("add_bias: bias " + to_string(bias.shape()) + " vs input " + to_string(a.shape()));
  }
  std::vector<T> out(a.data().begin(), a.data().end());
  auto b = bias.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i % d];
  NodePtr<T> pa = a.node(), pb = bias.node();
  return make_op<T>("add_bias", a.shape(), std::move(out), {&a, &bias},
                    [pa, pb, d](const Node<T>& self) {
                      const auto& g = self.grad;
                      if (pa->requires_grad) {
                        auto ga = pa->grad_buffer();
                        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                      }
                      if (pb->requires_grad) {
                        auto gb = pb->grad_buffer();
                        for (std::size_t i = 0; i < g.size(); ++i) gb[i % d] += g[i];
                      }
                    });
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() < 2 || b.rank() < 2) throw DimensionError("matmul: operands need rank >= 2");
  const std::size_t m = a.dim(-2), k = a.dim(-1), n = b.dim(-1);
  if (b.dim(-2) != k) {
    throw DimensionError("matmul: inner dimensions differ, " + to_string(a.shape()) + " @ " +
                         to_string(b.shape()));
  }
  const bool shared_b = b.rank() == 2;
  if (!shared_b && batch_shape(a) != batch_shape(b)) {
    throw DimensionError("matmul: batch dimensions differ, " + to_string(a.shape()) + " @ " +
                         to_string(b.shape()));
  }
  // A shared right operand turns the whole batch into one [B*M, K] product.
  const std::size_t batches = shared_b ? 1 : batch_of(a);
  const std::size_t rows = shared_b ? a.numel() / k : m;

  Shape out_shape = batch_shape(a);
  out_shape.push_back(m);
  out_shape.push_back(n);
  std::vector<T> out(batches * rows * n);
  for (std::size_t bi = 0; bi < batches; ++bi) {
    ConstMap<T> A(a.data().data() + bi * rows * k, rows, k);
    ConstMap<T> B(b.data().data() + bi * k * n, k, n);
    MutMap<T> C(out.data() + bi * rows * n, rows, n);
    C.noalias() = A * B;
  }
  NodePtr<T> pa = a.node(), pb = b.node();
  return make_op<T>("matmul", std::move(out_shape), std::move(out), {&a, &b},
                    [pa, pb, batches, rows, k, n](const Node<T>& self) {
                      for (std::size_t bi = 0; bi < batches; ++bi) {
                        ConstMap<T> G(self.grad.data() + bi * rows * n, rows, n);
                        if (pa->requires_grad) {
                          MutMap<T> GA(pa->grad_buffer().data() + bi * rows * k, rows, k);
                          ConstMap<T> B(pb->data.data() + bi * k * n, k, n);
                          GA.noalias() += G * B.transpose();
                        }
                        if (pb->requires_grad) {
                          MutMap<T> GB(pb->grad_buffer().data() + bi * k * n, k, n);
                          ConstMap<T> A(pa->data.data() + bi * rows * k, rows, k);
                          GB.noalias() += A.transpose() * G;
                        }
                      }
                    });
}

template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() < 2 || b.rank() < 2) throw DimensionError("matmul_nt: operands need rank >= 2");
  const std::size_t m = a.dim(-2), k = a.dim(-1), n = b.dim(-2);
  if (b.dim(-1) != k) {
    throw DimensionError("matmul_nt: inner dimensions differ, " + to_string(a.shape()) + " @ " +
                         to_string(b.shape()) + "^T");
  }
  const bool shared_b = b.rank() == 2;
  if (!shared_b && batch_shape(a) != batch_shape(b)) {
    throw DimensionError("matmul_nt: batch dimensions differ, " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
  const std::size_t batches = shared_b ? 1 : batch_of(a);
  const std::size_t rows = shared_b ? a.numel() / k : m;

  Shape out_shape = batch_shape(a);
  out_shape.push_back(m);
  out_shape.push_back(n);
  std::vector<T> out(batches * rows * n);
  for (std::size_t bi = 0; bi < batches; ++bi) {
    ConstMap<T> A(a.data().data() + bi * rows * k, rows, k);
    ConstMap<T> B(b.data().data() + bi * n * k, n, k);
    MutMap<T> C(out.data() + bi * rows * n, rows, n);
    C.noalias() = A * B.transpose();
  }
  NodePtr<T> pa = a.node(), pb = b.node();
  return make_op<T>("matmul_nt", std::move(out_shape), std::move(out), {&a, &b},
                    [pa, pb, batches, rows, k, n](const Node<T>& self) {
                      for (std::size_t bi = 0; bi < batches; ++bi) {
                        ConstMap<T> G(self.grad.data() + bi * rows * n, rows, n);
                        if (pa->requires_grad) {
                          MutMap<T> GA(pa->grad_buffer().data() + bi * rows * k, rows, k);
                          ConstMap<T> B(pb->data.data() + bi * n * k, n, k);
                          GA.noalias() += G * B;
                        }
                        if (pb->requires_grad) {
                          MutMap<T> GB(pb->grad_buffer().data() + bi * n * k, n, k);
                          ConstMap<T> A(pa->data.data() + bi * rows * k, rows, k);
                          GB.noalias() += G.transpose() * A;
                        }
                      }
                    });
}

template <typename T>
Tensor<T> gather(const Tensor<T>& x, Index index, Shape shape) {
  if (nc::numel(shape) != index.size()) {
    throw DimensionError("gather: " + std::to_string(index.size()) + " indices for shape " + to_string(shape));
  }
  const auto src = x.data();
  std::vector<T> out(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= src.size()) {
      throw DimensionError("gather: index " + std::to_string(index[i]) + " out of range for " +
                           to_string(x.shape()));
    }
    out[i] = src[index[i]];
  }
  NodePtr<T> px = x.node();
  auto idx = std::make_shared<const Index>(std::move(index));
  return make_op<T>("gather", std::move(shape), std::move(out), {&x}, [px, idx](const Node<T>& self) {
    auto gx = px->grad_buffer();
    const auto& ix = *idx;
    for (std::size_t i = 0; i < ix.size(); ++i) gx[ix[i]] += self.grad[i];
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (nc::numel(shape) != x.numel()) {
    throw DimensionError("reshape: " + to_string(x.shape()) + " -> " + to_string(shape));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  NodePtr<T> px = x.node();
  return make_op<T>("reshape", std::move(shape), std::move(out), {&x}, [px](const Node<T>& self) {
    auto gx = px->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> concat_rows(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) {
    throw DimensionError("concat_rows: " + to_string(a.shape()) + " with " + to_string(b.shape()));
  }
  std::vector<T> out;
  out.reserve(a.numel() + b.numel());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  NodePtr<T> pa = a.node(), pb = b.node();
  const std::size_t na = a.numel();
  return make_op<T>("concat_rows", {a.dim(0) + b.dim(0), a.dim(1)}, std::move(out), {&a, &b},
                    [pa, pb, na](const Node<T>& self) {
                      if (pa->requires_grad) {
                        auto ga = pa->grad_buffer();
                        for (std::size_t i = 0; i < na; ++i) ga[i] += self.grad[i];
                      }
                      if (pb->requires_grad) {
                        auto gb = pb->grad_buffer();
                        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += self.grad[na + i];
                      }
                    });
}

template <typename T>
Tensor<T> layernorm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias) {
  if (x.rank() == 0) throw DimensionError("layernorm: empty shape");
  const std::size_t d = x.shape().back();
  if (d == 0) throw DimensionError("layernorm: last axis has extent 0");
  if (gain.numel() != d || bias.numel() != d) {
    throw DimensionError("layernorm: affine parameters do not match last axis " + std::to_string(d));
  }
  const std::size_t rows = x.numel() / d;
  const auto in = x.data();
  const auto g = gain.data();
  const auto b = bias.data();
  std::vector<T> out(x.numel());
  auto xhat = std::make_shared<std::vector<T>>(x.numel());
  auto inv_std = std::make_shared<std::vector<T>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = in.data() + r * d;
    T mu = 0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= T(d);
    T var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= T(d);
    const T is = T(1) / std::sqrt(var + T(kLayerNormEps));
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const T h = (row[j] - mu) * is;
      (*xhat)[r * d + j] = h;
      out[r * d + j] = g[j] * h + b[j];
    }
  }
  NodePtr<T> px = x.node(), pg = gain.node(), pb = bias.node();
  return make_op<T>("layernorm", x.shape(), std::move(out), {&x, &gain, &bias},
                    [px, pg, pb, xhat, inv_std, rows, d](const Node<T>& self) {
                      const auto& dy = self.grad;
                      const auto& xh = *xhat;
                      if (pg->requires_grad) {
                        auto gg = pg->grad_buffer();
                        for (std::size_t i = 0; i < dy.size(); ++i) gg[i % d] += dy[i] * xh[i];
                      }
                      if (pb->requires_grad) {
                        auto gb = pb->grad_buffer();
                        for (std::size_t i = 0; i < dy.size(); ++i) gb[i % d] += dy[i];
                      }
                      if (!px->requires_grad) return;
                      auto gx = px->grad_buffer();
                      const auto& gain_v = pg->data;
                      for (std::size_t r = 0; r < rows; ++r) {
                        T s1 = 0, s2 = 0;
                        for (std::size_t j = 0; j < d; ++j) {
                          const T dh = dy[r * d + j] * gain_v[j];
                          s1 += dh;
                          s2 += dh * xh[r * d + j];
                        }
                        const T k = (*inv_std)[r] / T(d);
                        for (std::size_t j = 0; j < d; ++j) {
                          const T dh = dy[r * d + j] * gain_v[j];
                          gx[r * d + j] += k * (T(d) * dh - s1 - xh[r * d + j] * s2);
                        }
                      }
                    });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr T c = T(0.7978845608028654);  // sqrt(2/pi)
  constexpr T a = T(0.044715);
  const auto in = x.data();
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const T v = in[i];
    out[i] = T(0.5) * v * (T(1) + std::tanh(c * (v + a * v * v * v)));
  }
  NodePtr<T> px = x.node();
  return make_op<T>("gelu", x.shape(), std::move(out), {&x}, [px](const Node<T>& self) {
    auto gx = px->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const T v = px->data[i];
      const T t = std::tanh(c * (v + a * v * v * v));
      const T dt = (T(1) - t * t) * c * (T(1) + T(3) * a * v * v);
      gx[i] += self.grad[i] * (T(0.5) * (T(1) + t) + T(0.5) * v * dt);
    }
  });
}

template <typename T>
Tensor<T> softmax_lastaxis(const Tensor<T>& x) {
  const std::size_t n = x.dim(-1);
  const std::size_t rows = x.numel() / n;
  const auto in = x.data();
  std::vector<T> out(in.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = in.data() + r * n;
    T* o = out.data() + r * n;
    const T mx = *std::max_element(row, row + n);
    T z = 0;
    for (std::size_t j = 0; j < n; ++j) {
      o[j] = std::exp(row[j] - mx);
      z += o[j];
    }
    for (std::size_t j = 0; j < n; ++j) o[j] /= z;
  }
  NodePtr<T> px = x.node();
  return make_op<T>("softmax", x.shape(), std::move(out), {&x}, [px, rows, n](const Node<T>& self) {
    auto gx = px->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const T* y = self.data.data() + r * n;
      const T* dy = self.grad.data() + r * n;
      T dot = 0;
      for (std::size_t j = 0; j < n; ++j) dot += y[j] * dy[j];
      for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += y[j] * (dy[j] - dot);
    }
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T s = 0;
  for (auto v : x.data()) s += v;
  NodePtr<T> px = x.node();
  return make_op<T>("sum", {1}, {s}, {&x}, [px](const Node<T>& self) {
    auto gx = px->grad_buffer();
    for (auto& g : gx) g += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  return scale(sum(x), T(1) / T(x.numel()));
}

template <typename T>
Tensor<T> l1_mean(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "l1_mean");
  const auto x = a.data();
  const auto y = b.data();
  T s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
  const std::size_t n = x.size();
  NodePtr<T> pa = a.node(), pb = b.node();
  return make_op<T>("l1_mean", {1}, {s / T(n)}, {&a, &b}, [pa, pb, n](const Node<T>& self) {
    const T g = self.grad[0] / T(n);
    for (std::size_t i = 0; i < n; ++i) {
      const T diff = pa->data[i] - pb->data[i];
      const T sgn = diff > 0 ? T(1) : (diff < 0 ? T(-1) : T(0));
      if (pa->requires_grad) pa->grad_buffer()[i] += g * sgn;
      if (pb->requires_grad) pb->grad_buffer()[i] -= g * sgn;
    }
  });
}

template <typename T>
Tensor<T> relative_sq_mean(const Tensor<T>& est, const Tensor<T>& target, T eps) {
  require_same_shape(est, target, "relative_sq_mean");
  if (!(eps > 0)) throw DimensionError("relative_sq_mean: eps must be positive");
  const auto e = est.data();
  const auto t = target.data();
  const std::size_t n = e.size();
  // Denominators are frozen at forward time: this is the stop-gradient.
  auto inv_den2 = std::make_shared<std::vector<T>>(n);
  T s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const T den = std::abs(e[i]) + eps;
    (*inv_den2)[i] = T(1) / (den * den);
    const T r = e[i] - t[i];
    s += r * r * (*inv_den2)[i];
  }
  NodePtr<T> pe = est.node(), pt = target.node();
  return make_op<T>("relative_sq_mean", {1}, {s / T(n)}, {&est, &target},
                    [pe, pt, inv_den2, n](const Node<T>& self) {
                      const T g = self.grad[0] * T(2) / T(n);
                      for (std::size_t i = 0; i < n; ++i) {
                        const T v = g * (pe->data[i] - pt->data[i]) * (*inv_den2)[i];
                        if (pe->requires_grad) pe->grad_buffer()[i] += v;
                        if (pt->requires_grad) pt->grad_buffer()[i] -= v;
                      }
                    });
}

#define KGIN_INSTANTIATE_OPS(T)                                                         \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> scale(const Tensor<T>&, T);                                        \
  template Tensor<T> add_bias(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> matmul_nt(const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> gather(const Tensor<T>&, Index, Shape);                            \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                  \
  template Tensor<T> concat_rows(const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> layernorm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);   \
  template Tensor<T> gelu(const Tensor<T>&);                                            \
  template Tensor<T> softmax_lastaxis(const Tensor<T>&);                                \
  template Tensor<T> sum(const Tensor<T>&);                                             \
  template Tensor<T> mean(const Tensor<T>&);                                            \
  template Tensor<T> l1_mean(const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> relative_sq_mean(const Tensor<T>&, const Tensor<T>&, T);

KGIN_INSTANTIATE_OPS(float)
KGIN_INSTANTIATE_OPS(double)

}  // namespace kgin::nc
