#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "proxpty/fft.hpp"
#include "proxpty/field.hpp"
#include "proxpty/parallel.hpp"
#include "proxpty/scan.hpp"

namespace proxpty {

/// Relative floor applied to the least-squares denominators of the collective
/// probe/object updates. Pixels whose accumulated weight falls below
/// kDenominatorFloor * max(weight) divide by the floor instead; a pixel with
/// zero weight has zero numerator and therefore stays 0.
inline constexpr double kDenominatorFloor = 1e-9;

/// Far-field exit wave at position i: unitary FFT of probe * object patch.
inline ComplexField forward(const ComplexField& probe, const ComplexField& object,
                            const ScanPositions& pos, int i) {
  if (probe.rows() != pos.probe_rows || probe.cols() != pos.probe_cols) {
    throw std::invalid_argument("forward: probe shape mismatch");
  }
  return fft2_unitary(hadamard(probe, extract(object, pos, i)));
}

/// forward() for every position, parallel over positions.
inline FieldStack forward_all(const ComplexField& probe, const ComplexField& object,
                              const ScanPositions& pos) {
  FieldStack out(static_cast<std::size_t>(pos.count()));
  parallel_for(out.size(), [&](std::size_t i) {
    out[i] = forward(probe, object, pos, static_cast<int>(i));
  });
  return out;
}

/// Modulus projection: keeps the phase of v and forces its modulus to y.
/// Entries where v = 0 map to 0.
inline ComplexField project_modulus(const ComplexField& v, const RealField& y) {
  if (!y.same_shape(v)) throw std::invalid_argument("project_modulus: shape mismatch");
  ComplexField out(v.rows(), v.cols());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double target = y[i];
    if (!(target >= 0.0)) throw std::invalid_argument("project_modulus: negative amplitude");
    const double mag = std::abs(v[i]);
    out[i] = mag > 0.0 ? v[i] * (target / mag) : cplx{0.0, 0.0};
  }
  return out;
}

inline FieldStack project_modulus(const FieldStack& v, const AmplitudeStack& y) {
  if (v.size() != y.size()) throw std::invalid_argument("project_modulus: stack size mismatch");
  FieldStack out(v.size());
  parallel_for(v.size(), [&](std::size_t i) { out[i] = project_modulus(v[i], y[i]); });
  return out;
}

namespace detail {

/// Back-propagated targets ifft2(v_i), shared by the object and probe updates.
inline FieldStack backpropagate(const FieldStack& v) {
  FieldStack out(v.size());
  parallel_for(v.size(), [&](std::size_t i) { out[i] = ifft2_unitary(v[i]); });
  return out;
}

inline ComplexField divide_floored(const ComplexField& numerator, const RealField& weight,
                                   const char* what) {
  double max_w = 0.0;
  for (double w : weight.values()) max_w = std::max(max_w, w);
  if (max_w <= 0.0) {
    throw std::invalid_argument(std::string(what) + ": no illumination (zero weights everywhere)");
  }
  const double floor = kDenominatorFloor * max_w;
  ComplexField out(numerator.rows(), numerator.cols());
  for (std::size_t i = 0; i < numerator.size(); ++i) {
    out[i] = numerator[i] / std::max(weight[i], floor);
  }
  return out;
}

inline ComplexField update_object_bp(const ComplexField& probe, const FieldStack& backprop,
                                     const ScanPositions& pos) {
  ComplexField numerator(pos.object_rows, pos.object_cols);
  RealField weight(pos.object_rows, pos.object_cols);
  const int K = pos.count();
  for (int i = 0; i < K; ++i) {
    const auto [r0, c0] = pos.offsets[static_cast<std::size_t>(i)];
    const ComplexField& bp = backprop[static_cast<std::size_t>(i)];
    for (int r = 0; r < pos.probe_rows; ++r) {
      for (int c = 0; c < pos.probe_cols; ++c) {
        const cplx p = probe(r, c);
        numerator(r0 + r, c0 + c) += std::conj(p) * bp(r, c);
        weight(r0 + r, c0 + c) += std::norm(p);
      }
    }
  }
  return divide_floored(numerator, weight, "update_object");
}

inline ComplexField update_probe_bp(const ComplexField& object, const FieldStack& backprop,
                                    const ScanPositions& pos) {
  ComplexField numerator(pos.probe_rows, pos.probe_cols);
  RealField weight(pos.probe_rows, pos.probe_cols);
  const int K = pos.count();
  for (int i = 0; i < K; ++i) {
    const auto [r0, c0] = pos.offsets[static_cast<std::size_t>(i)];
    const ComplexField& bp = backprop[static_cast<std::size_t>(i)];
    for (int r = 0; r < pos.probe_rows; ++r) {
      for (int c = 0; c < pos.probe_cols; ++c) {
        const cplx patch = object(r0 + r, c0 + c);
        numerator(r, c) += std::conj(patch) * bp(r, c);
        weight(r, c) += std::norm(patch);
      }
    }
  }
  return divide_floored(numerator, weight, "update_probe");
}

}  // namespace detail

/// Collective object update: the least-squares minimizer of
/// sum_i ||FFT(probe * S_i o) - v_i||^2 over o, solved pixel by pixel with a
/// relative floor on the illumination weights.
inline ComplexField update_object(const ComplexField& probe, const FieldStack& v,
                                  const ScanPositions& pos) {
  if (probe.rows() != pos.probe_rows || probe.cols() != pos.probe_cols) {
    throw std::invalid_argument("update_object: probe shape mismatch");
  }
  if (static_cast<int>(v.size()) != pos.count()) {
    throw std::invalid_argument("update_object: stack size mismatch");
  }
  return detail::update_object_bp(probe, detail::backpropagate(v), pos);
}

/// Collective probe update, symmetric to update_object with object patches as
/// the weights.
inline ComplexField update_probe(const ComplexField& object, const FieldStack& v,
                                 const ScanPositions& pos) {
  if (object.rows() != pos.object_rows || object.cols() != pos.object_cols) {
    throw std::invalid_argument("update_probe: object shape mismatch");
  }
  if (static_cast<int>(v.size()) != pos.count()) {
    throw std::invalid_argument("update_probe: stack size mismatch");
  }
  return detail::update_probe_bp(object, detail::backpropagate(v), pos);
}

/// Projection onto the translation constraint set: alternates the collective
/// object and probe updates (object first) inner_iters times against the
/// target stack v, then rebuilds the forward stack from the refreshed pair.
/// Returns the new stack; object and probe are updated in place.
inline FieldStack project_translation(ComplexField& object, ComplexField& probe,
                                      const FieldStack& v, const ScanPositions& pos,
                                      int inner_iters = 1) {
  if (inner_iters < 1) throw std::invalid_argument("project_translation: inner_iters must be >= 1");
  const FieldStack backprop = detail::backpropagate(v);
  for (int k = 0; k < inner_iters; ++k) {
    object = detail::update_object_bp(probe, backprop, pos);
    probe = detail::update_probe_bp(object, backprop, pos);
  }
  return forward_all(probe, object, pos);
}

/// Data misfit of a probe/object pair against a target stack,
/// sum_i ||FFT(probe * S_i o) - v_i||^2.
inline double translation_residual(const ComplexField& object, const ComplexField& probe,
                                   const FieldStack& v, const ScanPositions& pos) {
  const FieldStack model = forward_all(probe, object, pos);
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; j < v[i].size(); ++j) acc += std::norm(model[i][j] - v[i][j]);
  }
  return acc;
}

}  // namespace proxpty
