#include "kgin/kspace/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "kgin/error.hpp"

namespace kgin::kspace {

const char* to_string(Domain d) { return d == Domain::image ? "image" : "kspace"; }

ComplexVolume::ComplexVolume(std::size_t x, std::size_t y, std::size_t t, Domain domain, double scale)
    : ComplexVolume(x, y, t, domain, std::vector<double>(x * y * t), std::vector<double>(x * y * t), scale) {}

ComplexVolume::ComplexVolume(std::size_t x, std::size_t y, std::size_t t, Domain domain,
                             std::vector<double> re, std::vector<double> im, double scale)
    : x_(x), y_(y), t_(t), domain_(domain), scale_(scale), re_(std::move(re)), im_(std::move(im)) {
  if (x == 0 || y == 0 || t == 0) throw DimensionError("volume extents must be positive");
  if (re_.size() != x * y * t || im_.size() != x * y * t) {
    throw DimensionError("volume payload does not match " + std::to_string(x) + "x" + std::to_string(y) + "x" +
                         std::to_string(t));
  }
  if (!(scale > 0) || !std::isfinite(scale)) throw DimensionError("volume scale must be positive and finite");
}

void ComplexVolume::require_same_dims(const ComplexVolume& o, const char* what) const {
  if (!same_dims(o)) {
    throw DimensionError(std::string(what) + ": volume dims " + std::to_string(x_) + "x" + std::to_string(y_) + "x" +
                         std::to_string(t_) + " vs " + std::to_string(o.x_) + "x" + std::to_string(o.y_) + "x" +
                         std::to_string(o.t_));
  }
}

void ComplexVolume::require_finite() const {
  for (std::size_t i = 0; i < re_.size(); ++i) {
    if (!std::isfinite(re_[i]) || !std::isfinite(im_[i])) throw NumericError("volume holds a non-finite value");
  }
}

double ComplexVolume::energy() const {
  double e = 0;
  for (std::size_t i = 0; i < re_.size(); ++i) e += re_[i] * re_[i] + im_[i] * im_[i];
  return e;
}

double ComplexVolume::max_magnitude() const {
  double m = 0;
  for (std::size_t i = 0; i < re_.size(); ++i) m = std::max(m, std::hypot(re_[i], im_[i]));
  return m;
}

std::vector<double> ComplexVolume::magnitude() const {
  std::vector<double> out(re_.size());
  for (std::size_t i = 0; i < re_.size(); ++i) out[i] = std::hypot(re_[i], im_[i]);
  return out;
}

ComplexVolume ComplexVolume::retagged(Domain d) const {
  ComplexVolume out = *this;
  out.domain_ = d;
  return out;
}

ComplexVolume ComplexVolume::with_scale(double scale) const {
  return ComplexVolume(x_, y_, t_, domain_, re_, im_, scale);
}

ComplexVolume operator+(const ComplexVolume& a, const ComplexVolume& b) {
  a.require_same_dims(b, "add");
  ComplexVolume out = a;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.re()[i] += b.re()[i];
    out.im()[i] += b.im()[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transforms

namespace {

bool is_pow2(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

// Unnormalized iterative radix-2 Cooley-Tukey, sign -1 forward.
void radix2(std::span<std::complex<double>> a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * std::numbers::pi / double(len) * (inverse ? 1.0 : -1.0);
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const std::complex<double> w = std::polar(1.0, ang * double(k));
        const auto u = a[i + k];
        const auto v = a[i + k + half] * w;
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

void check_extents(const ComplexVolume& v) {
  if (!is_pow2(v.x_dim()) || !is_pow2(v.y_dim())) {
    throw UnsupportedSizeError("fft extents must be powers of two, got " + std::to_string(v.x_dim()) + "x" +
                               std::to_string(v.y_dim()));
  }
}

ComplexVolume transform2(const ComplexVolume& v, bool inverse) {
  check_extents(v);
  const std::size_t nx = v.x_dim(), ny = v.y_dim(), nt = v.t_dim();
  ComplexVolume out = v.retagged(inverse ? Domain::image : Domain::kspace);
  std::vector<std::complex<double>> line(std::max(nx, ny));
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t y = 0; y < ny; ++y) {
      std::span<std::complex<double>> row(line.data(), nx);
      for (std::size_t x = 0; x < nx; ++x) row[x] = out.at(x, y, t);
      centered_fft(row, inverse);
      for (std::size_t x = 0; x < nx; ++x) out.set(x, y, t, row[x]);
    }
    for (std::size_t x = 0; x < nx; ++x) {
      std::span<std::complex<double>> col(line.data(), ny);
      for (std::size_t y = 0; y < ny; ++y) col[y] = out.at(x, y, t);
      centered_fft(col, inverse);
      for (std::size_t y = 0; y < ny; ++y) out.set(x, y, t, col[y]);
    }
  }
  return out;
}

}  // namespace

void centered_fft(std::span<std::complex<double>> data, bool inverse) {
  const std::size_t n = data.size();
  if (!is_pow2(n)) throw UnsupportedSizeError("fft length must be a power of two, got " + std::to_string(n));
  if (n == 1) return;
  // For even n, fftshift and ifftshift are the same half rotation.
  std::rotate(data.begin(), data.begin() + n / 2, data.end());
  radix2(data, inverse);
  std::rotate(data.begin(), data.begin() + n / 2, data.end());
  const double norm = 1.0 / std::sqrt(double(n));
  for (auto& c : data) c *= norm;
}

ComplexVolume fft2(const ComplexVolume& image) {
  if (image.domain() != Domain::image) throw DimensionError("fft2 expects an image-domain volume");
  return transform2(image, false);
}

ComplexVolume ifft2(const ComplexVolume& kspace) {
  if (kspace.domain() != Domain::kspace) throw DimensionError("ifft2 expects a k-space volume");
  return transform2(kspace, true);
}

ComplexVolume normalize(const ComplexVolume& v) {
  const double m = v.max_magnitude();
  if (!(m > 0)) throw DegenerateInputError("cannot normalize an all-zero volume");
  ComplexVolume out = v.with_scale(v.scale() * m);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.re()[i] /= m;
    out.im()[i] /= m;
  }
  return out;
}

ComplexVolume denormalize(const ComplexVolume& v) {
  ComplexVolume out = v.with_scale(1.0);
  const double s = v.scale();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.re()[i] *= s;
    out.im()[i] *= s;
  }
  return out;
}

// ---------------------------------------------------------------------------
// .kvol I/O

namespace {

constexpr char kMagic[4] = {'K', 'V', 'O', 'L'};
constexpr std::size_t kHeaderBytes = 4 + 4 * 4 + 1 + 8;

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
  return v;
}
std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
  return v;
}

}  // namespace

void write_volume(const ComplexVolume& v, const std::filesystem::path& path) {
  std::string buf;
  buf.reserve(kHeaderBytes + v.size() * 8);
  buf.append(kMagic, 4);
  put_u32(buf, kVolumeVersion);
  put_u32(buf, static_cast<std::uint32_t>(v.x_dim()));
  put_u32(buf, static_cast<std::uint32_t>(v.y_dim()));
  put_u32(buf, static_cast<std::uint32_t>(v.t_dim()));
  buf.push_back(static_cast<char>(v.domain()));
  put_u64(buf, std::bit_cast<std::uint64_t>(v.scale()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v.re()[i])));
    put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v.im()[i])));
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw IoError("write failed for " + path.string());
}

ComplexVolume read_volume(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  const std::string where = path.string() + ": ";
  if (buf.size() < kHeaderBytes) throw FormatError(where + "truncated header");
  if (!std::equal(kMagic, kMagic + 4, buf.data())) throw FormatError(where + "bad magic");
  if (get_u32(p + 4) != kVolumeVersion) throw FormatError(where + "unsupported version " + std::to_string(get_u32(p + 4)));
  const std::size_t x = get_u32(p + 8), y = get_u32(p + 12), t = get_u32(p + 16);
  if (x == 0 || y == 0 || t == 0) throw FormatError(where + "zero extent in header X/Y/T");
  const std::uint8_t dom = p[20];
  if (dom > 1) throw FormatError(where + "bad domain tag " + std::to_string(dom));
  const double scale = std::bit_cast<double>(get_u64(p + 21));
  if (!(scale > 0) || !std::isfinite(scale)) throw FormatError(where + "bad scale");
  const std::size_t n = x * y * t;
  if (buf.size() != kHeaderBytes + n * 8) {
    throw FormatError(where + "payload length " + std::to_string(buf.size() - kHeaderBytes) +
                      " bytes does not match header X*Y*T=" + std::to_string(n));
  }
  std::vector<double> re(n), im(n);
  const unsigned char* q = p + kHeaderBytes;
  for (std::size_t i = 0; i < n; ++i) {
    re[i] = std::bit_cast<float>(get_u32(q + 8 * i));
    im[i] = std::bit_cast<float>(get_u32(q + 8 * i + 4));
  }
  ComplexVolume v(x, y, t, static_cast<Domain>(dom), std::move(re), std::move(im), scale);
  v.require_finite();
  return v;
}

}  // namespace kgin::kspace
