#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>

#include "proxpty/field.hpp"
#include "proxpty/scan.hpp"

namespace proxpty {

/// A reconstruction problem instance: scan geometry, measured amplitudes and
/// (for simulated data) the ground truth used for evaluation. Matches the
/// PTYX container payload; amplitude values are kept at f32 precision so a
/// dataset round-trips through the file format bit-exactly.
struct Dataset {
  ScanPositions positions;
  AmplitudeStack measured;
  std::optional<ComplexField> truth_object;
  std::optional<ComplexField> truth_probe;
  std::optional<AmplitudeStack> truth_amplitudes;
  double scale_factor = 1.0;
  double snr_db = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;

  void validate() const {
    positions.validate();
    if (static_cast<int>(measured.size()) != positions.count()) {
      throw std::invalid_argument("Dataset: amplitude count does not match positions");
    }
    for (const auto& g : measured) {
      if (g.rows() != positions.probe_rows || g.cols() != positions.probe_cols) {
        throw std::invalid_argument("Dataset: amplitude grid shape mismatch");
      }
    }
    if (!is_valid_amplitude(measured)) {
      throw std::invalid_argument("Dataset: amplitudes must be nonnegative and finite");
    }
    if (truth_object && (truth_object->rows() != positions.object_rows ||
                         truth_object->cols() != positions.object_cols)) {
      throw std::invalid_argument("Dataset: truth object shape mismatch");
    }
    if (truth_probe && (truth_probe->rows() != positions.probe_rows ||
                        truth_probe->cols() != positions.probe_cols)) {
      throw std::invalid_argument("Dataset: truth probe shape mismatch");
    }
    if (truth_amplitudes) {
      if (truth_amplitudes->size() != measured.size()) {
        throw std::invalid_argument("Dataset: truth amplitude count mismatch");
      }
      for (const auto& g : *truth_amplitudes) {
        if (g.rows() != positions.probe_rows || g.cols() != positions.probe_cols) {
          throw std::invalid_argument("Dataset: truth amplitude shape mismatch");
        }
      }
      if (!is_valid_amplitude(*truth_amplitudes)) {
        throw std::invalid_argument("Dataset: truth amplitudes must be nonnegative and finite");
      }
    }
    if (!std::isfinite(scale_factor) || scale_factor <= 0.0) {
      throw std::invalid_argument("Dataset: scale factor must be positive and finite");
    }
  }
};

/// Narrows a value to f32 precision (the container storage width).
inline double quantize_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

inline void quantize_f32(RealField& f) {
  for (double& v : f.values()) v = quantize_f32(v);
}

inline void quantize_f32(ComplexField& f) {
  for (cplx& v : f.values()) v = cplx(quantize_f32(v.real()), quantize_f32(v.imag()));
}

inline void quantize_f32(AmplitudeStack& s) {
  for (auto& g : s) quantize_f32(g);
}

}  // namespace proxpty
