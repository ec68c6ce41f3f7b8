#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace proxpty {

using cplx = std::complex<double>;

/// Dense 2-D grid of complex wavefield values, row-major.
class ComplexField {
 public:
  ComplexField() = default;
  ComplexField(int rows, int cols, cplx fill = cplx{0.0, 0.0})
      : rows_(rows), cols_(cols), data_(check_extent(rows, cols), fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  cplx& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const cplx& operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  cplx& operator[](std::size_t i) { return data_[i]; }
  const cplx& operator[](std::size_t i) const { return data_[i]; }

  std::span<cplx> values() { return data_; }
  std::span<const cplx> values() const { return data_; }

  bool same_shape(const ComplexField& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  static std::size_t check_extent(int rows, int cols) {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("field extent must be positive");
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<cplx> data_;
};

/// Dense 2-D grid of real values, row-major. Used for measured amplitudes,
/// intensity buffers and image data.
class RealField {
 public:
  RealField() = default;
  RealField(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("field extent must be positive");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const double& operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  const double& operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const RealField& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool same_shape(const ComplexField& other) const {
    return rows_ == other.rows() && cols_ == other.cols();
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

/// One complex grid per scan position.
using FieldStack = std::vector<ComplexField>;
/// One nonnegative amplitude grid per scan position.
using AmplitudeStack = std::vector<RealField>;

inline bool is_finite(const ComplexField& f) {
  for (const cplx& v : f.values()) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

inline bool is_finite(const RealField& f) {
  for (double v : f.values()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

inline bool is_finite(const FieldStack& s) {
  for (const auto& f : s) {
    if (!is_finite(f)) return false;
  }
  return true;
}

/// Checks the amplitude-stack invariant: entries nonnegative and finite.
inline bool is_valid_amplitude(const AmplitudeStack& s) {
  for (const auto& g : s) {
    for (double v : g.values()) {
      if (!(v >= 0.0) || !std::isfinite(v)) return false;
    }
  }
  return true;
}

inline double squared_norm(const ComplexField& f) {
  double acc = 0.0;
  for (const cplx& v : f.values()) acc += std::norm(v);
  return acc;
}

inline double squared_norm(const FieldStack& s) {
  double acc = 0.0;
  for (const auto& f : s) acc += squared_norm(f);
  return acc;
}

inline double norm(const ComplexField& f) { return std::sqrt(squared_norm(f)); }
inline double norm(const FieldStack& s) { return std::sqrt(squared_norm(s)); }

/// Inner product with the first argument conjugated.
inline cplx dot(const ComplexField& a, const ComplexField& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("dot: shape mismatch");
  cplx acc{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

inline ComplexField hadamard(const ComplexField& a, const ComplexField& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("hadamard: shape mismatch");
  ComplexField out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

/// out = alpha*a + beta*b, elementwise.
inline ComplexField lincomb(cplx alpha, const ComplexField& a, cplx beta, const ComplexField& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("lincomb: shape mismatch");
  ComplexField out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = alpha * a[i] + beta * b[i];
  return out;
}

inline FieldStack lincomb(cplx alpha, const FieldStack& a, cplx beta, const FieldStack& b) {
  if (a.size() != b.size()) throw std::invalid_argument("lincomb: stack size mismatch");
  FieldStack out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = lincomb(alpha, a[i], beta, b[i]);
  return out;
}

inline double max_abs_diff(const ComplexField& a, const ComplexField& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const FieldStack& a, const FieldStack& b) {
  if (a.size() != b.size()) throw std::invalid_argument("max_abs_diff: stack size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, max_abs_diff(a[i], b[i]));
  return m;
}

/// Distance between stacks relative to the norm of the first.
inline double relative_distance(const FieldStack& a, const FieldStack& b) {
  if (a.size() != b.size()) throw std::invalid_argument("relative_distance: stack size mismatch");
  double num = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i].size(); ++j) num += std::norm(a[i][j] - b[i][j]);
  }
  double den = squared_norm(a);
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

}  // namespace proxpty
