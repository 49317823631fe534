#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace kgin::kspace {

enum class Domain : std::uint8_t { image = 0, kspace = 1 };

const char* to_string(Domain d);

/// 2D+t complex array stored as separate real and imaginary planes, kx
/// (image row) fastest, then ky, then t.
class ComplexVolume {
 public:
  ComplexVolume() = default;
  ComplexVolume(std::size_t x, std::size_t y, std::size_t t, Domain domain, double scale = 1.0);
  ComplexVolume(std::size_t x, std::size_t y, std::size_t t, Domain domain, std::vector<double> re,
                std::vector<double> im, double scale = 1.0);

  std::size_t x_dim() const { return x_; }
  std::size_t y_dim() const { return y_; }
  std::size_t t_dim() const { return t_; }
  std::size_t size() const { return re_.size(); }
  Domain domain() const { return domain_; }
  double scale() const { return scale_; }

  std::size_t index(std::size_t x, std::size_t y, std::size_t t) const { return x + x_ * (y + y_ * t); }
  std::complex<double> at(std::size_t x, std::size_t y, std::size_t t) const {
    const auto i = index(x, y, t);
    return {re_[i], im_[i]};
  }
  void set(std::size_t x, std::size_t y, std::size_t t, std::complex<double> v) {
    const auto i = index(x, y, t);
    re_[i] = v.real();
    im_[i] = v.imag();
  }

  std::span<const double> re() const { return re_; }
  std::span<const double> im() const { return im_; }
  std::span<double> re() { return re_; }
  std::span<double> im() { return im_; }

  bool same_dims(const ComplexVolume& o) const { return x_ == o.x_ && y_ == o.y_ && t_ == o.t_; }
  /// Throws DimensionError mentioning `what` when dims differ.
  void require_same_dims(const ComplexVolume& o, const char* what) const;
  /// Throws NumericError on NaN/Inf.
  void require_finite() const;

  double energy() const;
  double max_magnitude() const;
  std::vector<double> magnitude() const;

  /// Copy with a different domain tag. Reserved for the transforms.
  ComplexVolume retagged(Domain d) const;
  ComplexVolume with_scale(double scale) const;

  friend bool operator==(const ComplexVolume& a, const ComplexVolume& b) = default;

 private:
  std::size_t x_ = 0, y_ = 0, t_ = 0;
  Domain domain_ = Domain::image;
  double scale_ = 1.0;
  std::vector<double> re_, im_;
};

ComplexVolume operator+(const ComplexVolume& a, const ComplexVolume& b);

/// Centered orthonormal 2D DFT per frame (DC at (X/2, Y/2)).
ComplexVolume fft2(const ComplexVolume& image);
ComplexVolume ifft2(const ComplexVolume& kspace);

/// In-place centered orthonormal 1D transform of a power-of-two sequence.
void centered_fft(std::span<std::complex<double>> data, bool inverse);

/// Divides by the maximum complex magnitude; `scale` accumulates the divisor.
ComplexVolume normalize(const ComplexVolume& v);
/// Multiplies back by `scale` and resets it to 1.
ComplexVolume denormalize(const ComplexVolume& v);

/// `.kvol`: "KVOL", u32 version, u32 X, u32 Y, u32 T, u8 domain, f64 scale,
/// then X*Y*T interleaved (re, im) f32 pairs, kx fastest. Little-endian.
inline constexpr std::uint32_t kVolumeVersion = 1;

void write_volume(const ComplexVolume& v, const std::filesystem::path& path);
ComplexVolume read_volume(const std::filesystem::path& path);

}  // namespace kgin::kspace
