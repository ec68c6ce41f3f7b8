#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "proxpty/field.hpp"
#include "proxpty/scan.hpp"

namespace proxpty {

/// Per-iteration bookkeeping emitted by the engines. Optional entries stay
/// empty for engines that do not produce them. wall_time is zeroed in
/// deterministic mode so traces serialize reproducibly.
struct MetricTraceRecord {
  int t = 0;
  double nll = 0.0;
  std::optional<double> rmse;
  double lambda = 0.0;
  std::optional<double> dual_residual;
  int backtracks = 0;
  double wall_time = 0.0;
};

/// 0/1 mask of object pixels covered by at least one probe window. This is
/// the default evaluation region: pixels outside it are never constrained by
/// the data.
inline std::vector<std::uint8_t> illuminated_mask(const ScanPositions& pos) {
  std::vector<std::uint8_t> mask(
      static_cast<std::size_t>(pos.object_rows) * static_cast<std::size_t>(pos.object_cols), 0);
  for (const auto& [r0, c0] : pos.offsets) {
    for (int r = 0; r < pos.probe_rows; ++r) {
      const std::size_t base = static_cast<std::size_t>(r0 + r) * pos.object_cols + c0;
      for (int c = 0; c < pos.probe_cols; ++c) mask[base + c] = 1;
    }
  }
  return mask;
}

/// Complex scalar a minimizing ||reco - a * reference||_2, i.e.
/// <reference, reco> / ||reference||^2. The reference must be nonzero.
inline cplx fit_ambiguity(const ComplexField& reco, const ComplexField& reference,
                          const std::vector<std::uint8_t>* mask = nullptr) {
  if (!reco.same_shape(reference)) throw std::invalid_argument("fit_ambiguity: shape mismatch");
  if (mask && mask->size() != reference.size()) {
    throw std::invalid_argument("fit_ambiguity: mask size mismatch");
  }
  cplx corr{0.0, 0.0};
  double ref_norm = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    corr += std::conj(reference[i]) * reco[i];
    ref_norm += std::norm(reference[i]);
  }
  if (ref_norm == 0.0) throw std::invalid_argument("fit_ambiguity: zero reference");
  return corr / ref_norm;
}

/// Scalar-ambiguity-corrected error ||reco - a * reference||_2 / ||reco||_2
/// with a from fit_ambiguity. Invariant under reference -> c * reference for
/// any nonzero complex c.
inline double rmse(const ComplexField& reco, const ComplexField& reference,
                   const std::vector<std::uint8_t>* mask = nullptr) {
  const cplx a = fit_ambiguity(reco, reference, mask);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    num += std::norm(reco[i] - a * reference[i]);
    den += std::norm(reco[i]);
  }
  if (den == 0.0) throw std::invalid_argument("rmse: zero reconstruction");
  return std::sqrt(num / den);
}

}  // namespace proxpty
