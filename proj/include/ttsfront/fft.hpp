#pragma once

// Iterative radix-2 FFT, enough for power-of-two STFT frames.

#include <complex>
#include <vector>

#include "ttsfront/common.hpp"

namespace ttsfront::fft {

inline bool is_power_of_two(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline void fft_inplace(std::vector<std::complex<double>>& a) {
  size_t n = a.size();
  if (!is_power_of_two(n)) throw DataError("fft: size must be a power of two");
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  constexpr double kPi = 3.14159265358979323846;
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * kPi / static_cast<double>(len);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (size_t k = 0; k < len / 2; ++k) {
        auto u = a[i + k];
        auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// Forward FFT of a real frame; returns bins 0..n/2 inclusive.
inline std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
  std::vector<std::complex<double>> a(x.begin(), x.end());
  fft_inplace(a);
  a.resize(x.size() / 2 + 1);
  return a;
}

}  // namespace ttsfront::fft
