#pragma once

#include <complex>
#include <vector>

#include "echolocate/core.hpp"

namespace echolocate {

using cdouble = std::complex<double>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// In-place iterative radix-2 transform. inverse=true applies the 1/n scale.
inline void fft_inplace(std::vector<cdouble>& a, bool inverse) {
  const std::size_t n = a.size();
  require(is_power_of_two(n), "fft size must be a power of two");
  if (n == 1) return;

  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * M_PI / double(len);
    const cdouble wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cdouble w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        cdouble u = a[i + j];
        cdouble v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }

  if (inverse) {
    const double scale = 1.0 / double(n);
    for (auto& x : a) x *= scale;
  }
}

/// Forward transform of a real signal zero-padded to fft_size; returns
/// the one-sided spectrum of fft_size/2 + 1 bins.
inline std::vector<cdouble> rfft(const Eigen::VectorXd& x, std::size_t fft_size) {
  require(is_power_of_two(fft_size), "fft size must be a power of two");
  require(std::size_t(x.size()) <= fft_size, "signal longer than fft size");
  std::vector<cdouble> buf(fft_size, cdouble(0.0, 0.0));
  for (Eigen::Index i = 0; i < x.size(); ++i) buf[std::size_t(i)] = cdouble(x[i], 0.0);
  fft_inplace(buf, false);
  buf.resize(fft_size / 2 + 1);
  return buf;
}

/// Inverse of rfft: reconstructs the conjugate-symmetric spectrum and
/// returns fft_size real samples.
inline Eigen::VectorXd irfft(const std::vector<cdouble>& spectrum, std::size_t fft_size) {
  require(is_power_of_two(fft_size), "fft size must be a power of two");
  require(spectrum.size() == fft_size / 2 + 1, "one-sided spectrum has wrong bin count");
  std::vector<cdouble> buf(fft_size);
  for (std::size_t k = 0; k <= fft_size / 2; ++k) buf[k] = spectrum[k];
  for (std::size_t k = fft_size / 2 + 1; k < fft_size; ++k)
    buf[k] = std::conj(spectrum[fft_size - k]);
  fft_inplace(buf, true);
  Eigen::VectorXd out(fft_size);
  for (std::size_t i = 0; i < fft_size; ++i) out[Eigen::Index(i)] = buf[i].real();
  return out;
}

}  // namespace echolocate
