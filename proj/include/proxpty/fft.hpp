#pragma once

#include <memory>
#include <numbers>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "proxpty/field.hpp"

namespace proxpty {
namespace detail {

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Twiddle tables for an iterative radix-2 transform of length n (power of
/// two). Tables are built once per length and cached per thread.
struct Pow2Plan {
  int n = 0;
  std::vector<cplx> twiddle;  // e^{-2*pi*i*j/n}, j in [0, n/2)

  explicit Pow2Plan(int length) : n(length), twiddle(length / 2) {
    const double step = -2.0 * std::numbers::pi / n;
    for (int j = 0; j < n / 2; ++j) {
      twiddle[j] = std::polar(1.0, step * j);
    }
  }
};

inline const Pow2Plan& pow2_plan(int n) {
  thread_local std::unordered_map<int, std::unique_ptr<Pow2Plan>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Pow2Plan>(n);
  return *slot;
}

/// Unnormalized forward DFT, X[k] = sum_j x[j] e^{-2*pi*i*jk/n}, in place.
/// inverse=true conjugates the twiddles (still unnormalized).
inline void fft_pow2(cplx* x, int n, bool inverse) {
  if (n == 1) return;
  const Pow2Plan& plan = pow2_plan(n);
  // bit-reversal permutation
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const int stride = n / len;
    for (int start = 0; start < n; start += len) {
      for (int k = 0; k < len / 2; ++k) {
        cplx w = plan.twiddle[static_cast<std::size_t>(k) * stride];
        if (inverse) w = std::conj(w);
        cplx& a = x[start + k];
        cplx& b = x[start + k + len / 2];
        const cplx t = b * w;
        b = a - t;
        a += t;
      }
    }
  }
}

/// Bluestein chirp-z tables for arbitrary length n.
struct BluesteinPlan {
  int n = 0;
  int m = 0;                       // convolution length, power of two >= 2n-1
  std::vector<cplx> chirp;         // c[j] = e^{-i*pi*j^2/n}
  std::vector<cplx> kernel_fft;    // forward FFT of the wrapped conj-chirp

  explicit BluesteinPlan(int length) : n(length) {
    m = 1;
    while (m < 2 * n - 1) m <<= 1;
    chirp.resize(n);
    for (int j = 0; j < n; ++j) {
      // j^2 mod 2n keeps the sin/cos argument small and exact
      long long q = (static_cast<long long>(j) * j) % (2LL * n);
      chirp[j] = std::polar(1.0, -std::numbers::pi * static_cast<double>(q) / n);
    }
    std::vector<cplx> kernel(m, cplx{0.0, 0.0});
    kernel[0] = std::conj(chirp[0]);
    for (int j = 1; j < n; ++j) {
      kernel[j] = std::conj(chirp[j]);
      kernel[m - j] = std::conj(chirp[j]);
    }
    fft_pow2(kernel.data(), m, false);
    kernel_fft = std::move(kernel);
  }
};

inline const BluesteinPlan& bluestein_plan(int n) {
  thread_local std::unordered_map<int, std::unique_ptr<BluesteinPlan>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<BluesteinPlan>(n);
  return *slot;
}

/// Unnormalized forward DFT of arbitrary length via chirp-z.
inline void fft_bluestein(cplx* x, int n) {
  const BluesteinPlan& plan = bluestein_plan(n);
  std::vector<cplx> a(plan.m, cplx{0.0, 0.0});
  for (int j = 0; j < n; ++j) a[j] = x[j] * plan.chirp[j];
  fft_pow2(a.data(), plan.m, false);
  for (int j = 0; j < plan.m; ++j) a[j] *= plan.kernel_fft[j];
  fft_pow2(a.data(), plan.m, true);
  const double inv_m = 1.0 / plan.m;
  for (int k = 0; k < n; ++k) x[k] = a[k] * inv_m * plan.chirp[k];
}

/// Unnormalized 1-D DFT dispatch; inverse uses the conjugation identity.
inline void dft_line(cplx* x, int n, bool inverse) {
  if (is_pow2(n)) {
    fft_pow2(x, n, inverse);
    return;
  }
  if (inverse) {
    for (int j = 0; j < n; ++j) x[j] = std::conj(x[j]);
    fft_bluestein(x, n);
    for (int j = 0; j < n; ++j) x[j] = std::conj(x[j]);
  } else {
    fft_bluestein(x, n);
  }
}

inline ComplexField fft2_impl(const ComplexField& field, bool inverse) {
  if (field.size() == 0) throw std::invalid_argument("fft2: empty field");
  if (!is_finite(field)) throw std::invalid_argument("fft2: non-finite input");
  const int rows = field.rows();
  const int cols = field.cols();
  ComplexField out = field;
  for (int r = 0; r < rows; ++r) {
    dft_line(&out(r, 0), cols, inverse);
  }
  std::vector<cplx> col(rows);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) col[r] = out(r, c);
    dft_line(col.data(), rows, inverse);
    for (int r = 0; r < rows; ++r) out(r, c) = col[r];
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(rows) * cols);
  for (cplx& v : out.values()) v *= scale;
  return out;
}

}  // namespace detail

/// Unitary 2-D discrete Fourier transform (scaled by 1/sqrt(rows*cols)), so
/// the adjoint equals the inverse and energy is preserved.
inline ComplexField fft2_unitary(const ComplexField& field) {
  return detail::fft2_impl(field, false);
}

/// Inverse of fft2_unitary, with the same normalization.
inline ComplexField ifft2_unitary(const ComplexField& field) {
  return detail::fft2_impl(field, true);
}

}  // namespace proxpty
