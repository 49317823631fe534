#include "kgin/model/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>

#include "kgin/error.hpp"

namespace kgin::model {
namespace {

constexpr char kMagic[4] = {'K', 'G', 'I', 'N'};

std::uint64_t fnv1a(const char* p, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(p[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const std::string& s) { buf_ += s; }
  std::string& buffer() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& buf, std::size_t end) : buf_(buf), end_(end) {}
  void need(std::size_t n, const char* what) const {
    if (pos_ + n > end_) throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(buf_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(buf_[pos_++])) << (8 * i);
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == end_; }

 private:
  const std::string& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

void write_config(Writer& w, const ModelConfig& c) {
  for (std::size_t v : {c.embed_dim, c.n_heads, c.n_layers, c.mlp_ratio, c.x, c.y, c.t, c.kirm_patch})
    w.u32(static_cast<std::uint32_t>(v));
  std::uint8_t bits = 0;
  for (std::size_t i = 0; i < 3; ++i) bits |= std::uint8_t(c.kirm_planes[i] ? 1u << i : 0u);
  w.u8(bits);
  w.f64(c.loss_weight_hdr);
  w.f64(c.hdr_eps);
}

ModelConfig read_config(Reader& r) {
  ModelConfig c;
  c.embed_dim = r.u32("config");
  c.n_heads = r.u32("config");
  c.n_layers = r.u32("config");
  c.mlp_ratio = r.u32("config");
  c.x = r.u32("config");
  c.y = r.u32("config");
  c.t = r.u32("config");
  c.kirm_patch = r.u32("config");
  const std::uint8_t bits = r.u8("config");
  if (bits > 7) throw CheckpointError("checkpoint config: bad plane bits");
  for (std::size_t i = 0; i < 3; ++i) c.kirm_planes[i] = (bits >> i) & 1u;
  c.loss_weight_hdr = r.f64("config");
  c.hdr_eps = r.f64("config");
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint embeds an invalid config: ") + e.what());
  }
  return c;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

// Verifies magic, version and trailing hash; returns a reader over the body.
Reader open_checked(const std::string& buf) {
  if (buf.size() < 8 + 8) throw CheckpointError("checkpoint truncated");
  const std::size_t body = buf.size() - 8;
  Reader tail(buf, buf.size());
  tail.str(body, "body");
  if (tail.u64("hash") != fnv1a(buf.data(), body)) throw CheckpointError("checkpoint hash mismatch (corrupt file)");
  Reader r(buf, body);
  if (r.str(4, "magic") != std::string(kMagic, 4)) throw CheckpointError("checkpoint has bad magic");
  const auto version = r.u32("version");
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  return r;
}

}  // namespace

template <typename T>
void save_params(const KspaceNetwork<T>& net, const std::filesystem::path& path) {
  Writer w;
  w.bytes(std::string(kMagic, 4));
  w.u32(kCheckpointVersion);
  write_config(w, net.config());
  w.u32(static_cast<std::uint32_t>(net.parameters().size()));
  for (const auto& p : net.parameters()) {
    w.u32(static_cast<std::uint32_t>(p.name.size()));
    w.bytes(p.name);
    const auto& shape = p.tensor.shape();
    w.u32(static_cast<std::uint32_t>(shape.size()));
    for (auto e : shape) w.u32(static_cast<std::uint32_t>(e));
    for (auto v : p.tensor.data()) w.f32(static_cast<float>(v));
  }
  auto& buf = w.buffer();
  const std::uint64_t h = fnv1a(buf.data(), buf.size());
  w.u64(h);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw IoError("write failed for " + path.string());
}

ModelConfig read_checkpoint_config(const std::filesystem::path& path) {
  const auto buf = slurp(path);
  Reader r = open_checked(buf);
  return read_config(r);
}

template <typename T>
void load_params(KspaceNetwork<T>& net, const std::filesystem::path& path) {
  const auto buf = slurp(path);
  Reader r = open_checked(buf);
  const ModelConfig stored = read_config(r);
  if (!(stored == net.config())) {
    throw CheckpointError("checkpoint config (" + stored.describe() + ") does not match model (" +
                          net.config().describe() + ")");
  }
  const auto count = r.u32("tensor count");
  const auto& params = net.parameters();
  if (count != params.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(count) + " tensors, model has " +
                          std::to_string(params.size()));
  }
  // Decode everything before touching the model so a bad file leaves it intact.
  std::vector<std::vector<T>> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto name = r.str(r.u32("name length"), "name");
    if (name != params[i].name) throw CheckpointError("checkpoint tensor '" + name + "' where '" + params[i].name + "' expected");
    const auto rank = r.u32("rank");
    nc::Shape shape(rank);
    for (auto& e : shape) e = r.u32("extent");
    if (shape != params[i].tensor.shape()) throw CheckpointError("checkpoint tensor '" + name + "' has shape " + nc::to_string(shape));
    values[i].resize(nc::numel(shape));
    for (auto& v : values[i]) v = T(r.f32("payload"));
    nc::require_finite<T>(values[i], "checkpoint payload");
  }
  if (!r.done()) throw CheckpointError("checkpoint has trailing bytes");
  for (std::size_t i = 0; i < count; ++i) {
    auto t = params[i].tensor;
    std::copy(values[i].begin(), values[i].end(), t.mutable_data().begin());
  }
}

template <typename T>
KspaceNetwork<T> load_network(const std::filesystem::path& path) {
  KspaceNetwork<T> net(read_checkpoint_config(path), 0);
  load_params(net, path);
  return net;
}

std::string checkpoint_id(const std::filesystem::path& path) {
  const auto buf = slurp(path);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(buf.data(), buf.size())));
  return hex;
}

template void save_params(const KspaceNetwork<float>&, const std::filesystem::path&);
template void save_params(const KspaceNetwork<double>&, const std::filesystem::path&);
template void load_params(KspaceNetwork<float>&, const std::filesystem::path&);
template void load_params(KspaceNetwork<double>&, const std::filesystem::path&);
template KspaceNetwork<float> load_network<float>(const std::filesystem::path&);
template KspaceNetwork<double> load_network<double>(const std::filesystem::path&);

}  // namespace kgin::model
