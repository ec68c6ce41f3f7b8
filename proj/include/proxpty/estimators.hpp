#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxpty/field.hpp"
#include "proxpty/parallel.hpp"

namespace proxpty {

enum class NoiseKind { GaussianAmplitude, PoissonIntensity };

/// Statistical model of the measured amplitudes. epsilon (counts^2) keeps the
/// Poisson expressions smooth at zero intensity and is ignored by the
/// Gaussian model.
struct NoiseModel {
  NoiseKind kind = NoiseKind::GaussianAmplitude;
  double epsilon = 1e-8;

  static NoiseModel gaussian() { return {NoiseKind::GaussianAmplitude, 0.0}; }
  static NoiseModel poisson(double eps = 1e-8) {
    if (eps < 0.0) throw std::invalid_argument("NoiseModel: epsilon must be >= 0");
    return {NoiseKind::PoissonIntensity, eps};
  }
};

namespace detail {

inline void check_stack_shapes(const AmplitudeStack& y, const FieldStack& x, const char* what) {
  if (y.size() != x.size()) throw std::invalid_argument(std::string(what) + ": stack size mismatch");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!y[i].same_shape(x[i])) throw std::invalid_argument(std::string(what) + ": shape mismatch");
  }
}

inline double nll_one(const RealField& y, const ComplexField& x, const NoiseModel& model) {
  double acc = 0.0;
  if (model.kind == NoiseKind::GaussianAmplitude) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = y[j] - std::abs(x[j]);
      acc += d * d;
    }
  } else {
    const double eps = model.epsilon;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double intensity = std::norm(x[j]);
      const double counts = y[j] * y[j] + eps;
      acc += intensity;
      if (counts > 0.0) acc -= counts * std::log(intensity + eps);
    }
  }
  return acc;
}

inline ComplexField grad_one(const RealField& y, const ComplexField& x, const NoiseModel& model) {
  ComplexField g(x.rows(), x.cols());
  if (model.kind == NoiseKind::GaussianAmplitude) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double mag = std::abs(x[j]);
      const cplx phase = mag > 0.0 ? x[j] / mag : cplx{0.0, 0.0};
      g[j] = x[j] - y[j] * phase;
    }
  } else {
    const double eps = model.epsilon;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double counts = y[j] * y[j] + eps;
      g[j] = x[j] - x[j] * (counts / (std::norm(x[j]) + eps));
    }
  }
  return g;
}

}  // namespace detail

/// Negative log-likelihood of the stack under the given noise model.
/// Gaussian: sum (y - |x|)^2. Poisson: sum [|x|^2 - (y^2+eps) ln(|x|^2+eps)],
/// defined up to an additive constant (only differences are meaningful).
inline double nll(const AmplitudeStack& y, const FieldStack& x, const NoiseModel& model) {
  detail::check_stack_shapes(y, x, "nll");
  std::vector<double> partial(x.size(), 0.0);
  parallel_for(x.size(), [&](std::size_t i) { partial[i] = detail::nll_one(y[i], x[i], model); });
  double acc = 0.0;
  for (double p : partial) acc += p;  // fixed order
  return acc;
}

/// Wirtinger gradient of nll with respect to the conjugate exit waves:
/// Gaussian: x - y*phase(x); Poisson: x - x (y^2+eps)/(|x|^2+eps).
inline FieldStack grad_nll(const AmplitudeStack& y, const FieldStack& x, const NoiseModel& model) {
  detail::check_stack_shapes(y, x, "grad_nll");
  if (model.kind == NoiseKind::PoissonIntensity && !(model.epsilon > 0.0)) {
    throw std::invalid_argument("grad_nll: Poisson model requires epsilon > 0");
  }
  FieldStack g(x.size());
  parallel_for(x.size(), [&](std::size_t i) { g[i] = detail::grad_one(y[i], x[i], model); });
  return g;
}

/// Closed-form modulus of the MAP amplitude estimate for one pixel: the
/// minimizer over r >= 0 of lambda*loss(r) + (r - |v|)^2.
inline double map_modulus(double lambda, double y, double v_abs, const NoiseModel& model) {
  if (model.kind == NoiseKind::GaussianAmplitude) {
    return (lambda * y + v_abs) / (1.0 + lambda);
  }
  const double disc = v_abs * v_abs + 4.0 * lambda * (1.0 + lambda) * y * y;
  return (v_abs + std::sqrt(disc)) / (2.0 * (1.0 + lambda));
}

/// MAP estimate of the exit waves: keeps the phase of v and replaces the
/// modulus with the blend of |v| and the measurement dictated by the noise
/// model and the step size lambda. lambda = 0 returns v unchanged.
inline FieldStack map_estimate(double lambda, const AmplitudeStack& y, const FieldStack& v,
                               const NoiseModel& model) {
  detail::check_stack_shapes(y, v, "map_estimate");
  if (lambda < 0.0) throw std::invalid_argument("map_estimate: lambda must be >= 0");
  if (lambda == 0.0) return v;
  FieldStack out(v.size());
  parallel_for(v.size(), [&](std::size_t i) {
    const RealField& yi = y[i];
    const ComplexField& vi = v[i];
    ComplexField oi(vi.rows(), vi.cols());
    for (std::size_t j = 0; j < vi.size(); ++j) {
      if (!(yi[j] >= 0.0)) throw std::invalid_argument("map_estimate: negative amplitude");
      const double mag = std::abs(vi[j]);
      if (mag > 0.0) {
        oi[j] = vi[j] * (map_modulus(lambda, yi[j], mag, model) / mag);
      } else {
        oi[j] = cplx{0.0, 0.0};
      }
    }
    out[i] = std::move(oi);
  });
  return out;
}

namespace detail {

/// Majorizer assembled from precomputed pieces; the public overload feeds it
/// the exact nll/grad_nll values so both routes agree bit for bit.
inline double q_upper_bound_given(double nll_x, const FieldStack& grad_x, const FieldStack& z,
                                  const FieldStack& x, double lambda) {
  std::vector<double> partial(z.size(), 0.0);
  parallel_for(z.size(), [&](std::size_t i) {
    double lin = 0.0;
    double quad = 0.0;
    for (std::size_t j = 0; j < z[i].size(); ++j) {
      const cplx d = z[i][j] - x[i][j];
      const cplx g = grad_x[i][j];
      lin += g.real() * d.real() + g.imag() * d.imag();  // Re<g, d>
      quad += std::norm(d);
    }
    partial[i] = 2.0 * lin + quad / lambda;
  });
  double acc = nll_x;
  for (double p : partial) acc += p;
  return acc;
}

}  // namespace detail

/// Backtracking majorizer Q(z, x) = nll(x) + 2 Re<grad(x), z-x> +
/// (1/lambda)||z-x||^2; tight at z = x.
inline double q_upper_bound(const FieldStack& z, const FieldStack& x, double lambda,
                            const AmplitudeStack& y, const NoiseModel& model) {
  if (!(lambda > 0.0)) throw std::invalid_argument("q_upper_bound: lambda must be > 0");
  detail::check_stack_shapes(y, x, "q_upper_bound");
  if (z.size() != x.size()) throw std::invalid_argument("q_upper_bound: stack size mismatch");
  return detail::q_upper_bound_given(nll(y, x, model), grad_nll(y, x, model), z, x, lambda);
}

}  // namespace proxpty
