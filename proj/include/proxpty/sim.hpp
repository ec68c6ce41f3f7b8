#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "proxpty/data.hpp"
#include "proxpty/fft.hpp"
#include "proxpty/field.hpp"
#include "proxpty/model.hpp"
#include "proxpty/parallel.hpp"
#include "proxpty/rng.hpp"
#include "proxpty/scan.hpp"

namespace proxpty {

enum class ProbeKind {
  Disk,  // binary aperture: amplitude 1 inside the radius, 0 outside
  Fzp,   // focused-optic stand-in: transform of a pupil disk, full-window support
};

/// Parameters of a synthetic acquisition. Source images are grayscale fields
/// normalized to [0, 1]; the object frame is enlarged beyond the images when
/// the scan needs the room, padded with free-space transmission 1.
struct SimulationSpec {
  RealField amp_image;
  RealField phase_image;
  double phase_range = 1.0;  // radians spanned by the phase image
  ProbeKind probe_kind = ProbeKind::Fzp;
  double probe_radius = 3.7;  // real-space footprint radius, pixels
  int probe_rows = 64;
  int probe_cols = 64;
  double fermat_c = 4.0;  // spiral constant, pixels
  int positions = 1261;
  double max_counts = 1e4;
  bool poisson_noise = true;
  double amp_floor = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (amp_image.size() == 0 || phase_image.size() == 0) {
      throw std::invalid_argument("SimulationSpec: source images required");
    }
    if (!amp_image.same_shape(phase_image)) {
      throw std::invalid_argument("SimulationSpec: image shape mismatch");
    }
    if (!(max_counts > 0.0)) throw std::invalid_argument("SimulationSpec: max_counts must be > 0");
    if (positions < 1) throw std::invalid_argument("SimulationSpec: need at least one position");
    if (!(fermat_c > 0.0)) throw std::invalid_argument("SimulationSpec: fermat constant must be > 0");
    if (probe_rows <= 0 || probe_cols <= 0) {
      throw std::invalid_argument("SimulationSpec: probe extent must be positive");
    }
    if (!(probe_radius > 0.0)) throw std::invalid_argument("SimulationSpec: probe radius must be > 0");
    if (amp_floor < 0.0 || amp_floor > 1.0) {
      throw std::invalid_argument("SimulationSpec: amplitude floor must lie in [0, 1]");
    }
  }
};

/// Fermat spiral scan r_i = c sqrt(i), theta_i = 2.4 i for i = 1..count,
/// rounded to whole object pixels. Throws if any window leaves the object.
inline ScanPositions fermat_positions(double c, int count, double center_row, double center_col,
                                      int probe_rows, int probe_cols, int object_rows,
                                      int object_cols) {
  if (count < 1) throw std::invalid_argument("fermat_positions: need at least one position");
  if (!(c > 0.0)) throw std::invalid_argument("fermat_positions: spiral constant must be > 0");
  ScanPositions pos;
  pos.probe_rows = probe_rows;
  pos.probe_cols = probe_cols;
  pos.object_rows = object_rows;
  pos.object_cols = object_cols;
  pos.offsets.reserve(static_cast<std::size_t>(count));
  const int half_r = probe_rows / 2;
  const int half_c = probe_cols / 2;
  for (int i = 1; i <= count; ++i) {
    const double r = c * std::sqrt(static_cast<double>(i));
    const double theta = 2.4 * static_cast<double>(i);
    const long row = std::lround(center_row + r * std::cos(theta));
    const long col = std::lround(center_col + r * std::sin(theta));
    pos.offsets.emplace_back(static_cast<int>(row) - half_r, static_cast<int>(col) - half_c);
  }
  pos.validate();
  return pos;
}

/// Object transmission from amplitude and phase source images:
/// o = amp * exp(i * phase_range * phase), with the amplitude rescaled onto
/// [amp_floor, 1] so no pixel is fully opaque.
inline ComplexField synth_object(const RealField& amp, const RealField& phase, double phase_range,
                                 double amp_floor = 0.1) {
  if (!amp.same_shape(phase)) throw std::invalid_argument("synth_object: shape mismatch");
  double lo = amp[0];
  double hi = amp[0];
  for (double v : amp.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  ComplexField o(amp.rows(), amp.cols());
  for (std::size_t j = 0; j < amp.size(); ++j) {
    const double a = amp_floor + (1.0 - amp_floor) * ((amp[j] - lo) / span);
    o[j] = std::polar(a, phase_range * phase[j]);
  }
  return o;
}

/// Synthetic illumination. Disk: a hard aperture of the given radius. Fzp:
/// the focal field of a circular pupil, which keeps small but nonzero tails
/// across the whole window so every window pixel carries some illumination.
inline ComplexField make_probe(ProbeKind kind, double radius, int rows, int cols) {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("make_probe: extent must be positive");
  if (!(radius > 0.0)) throw std::invalid_argument("make_probe: radius must be > 0");
  const double cr = rows / 2.0;
  const double cc = cols / 2.0;
  ComplexField probe(rows, cols);
  if (kind == ProbeKind::Disk) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const double d = std::hypot(r - cr, c - cc);
        probe(r, c) = d <= radius ? cplx{1.0, 0.0} : cplx{0.0, 0.0};
      }
    }
    return probe;
  }
  // Pupil radius chosen so the focal spot's first zero lands at `radius`.
  const double n_min = std::min(rows, cols);
  const double pupil_radius = std::max(1.0, 0.61 * n_min / radius);
  ComplexField pupil(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double d = std::hypot(r - cr, c - cc);
      pupil(r, c) = d <= pupil_radius ? cplx{1.0, 0.0} : cplx{0.0, 0.0};
    }
  }
  // Shift the pupil to DC, transform, then recenter the focal spot.
  ComplexField shifted(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      shifted(r, c) = pupil((r + rows / 2) % rows, (c + cols / 2) % cols);
    }
  }
  ComplexField focus = ifft2_unitary(shifted);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      probe(r, c) = focus((r + rows / 2) % rows, (c + cols / 2) % cols);
    }
  }
  double total = squared_norm(probe);
  const double gain = total > 0.0 ? 1.0 / std::sqrt(total) : 1.0;
  for (cplx& v : probe.values()) v *= gain;
  return probe;
}

struct Measurements {
  AmplitudeStack measured;      // sqrt of integer detector counts
  AmplitudeStack ground_truth;  // sqrt of the scaled noise-free intensities
  double scale_factor = 1.0;
};

/// Far-field intensities of the probe/object pair, globally scaled so the
/// brightest pixel equals max_counts, then corrupted: Poisson counts when
/// poisson is set, otherwise round-to-integer (half away from zero, so
/// intensities below 0.5 counts drop to zero).
inline Measurements simulate_measurements(const ComplexField& probe, const ComplexField& object,
                                          const ScanPositions& pos, double max_counts,
                                          bool poisson, std::uint64_t seed) {
  if (!(max_counts > 0.0)) throw std::invalid_argument("simulate_measurements: max_counts must be > 0");
  const std::size_t K = static_cast<std::size_t>(pos.count());
  std::vector<RealField> intensity(K);
  parallel_for(K, [&](std::size_t i) {
    const ComplexField wave = forward(probe, object, pos, static_cast<int>(i));
    RealField grid(pos.probe_rows, pos.probe_cols);
    for (std::size_t j = 0; j < wave.size(); ++j) grid[j] = std::norm(wave[j]);
    intensity[i] = std::move(grid);
  });
  double peak = 0.0;
  for (const auto& grid : intensity) {
    for (double v : grid.values()) peak = std::max(peak, v);
  }
  if (peak <= 0.0) throw std::invalid_argument("simulate_measurements: all intensities are zero");
  const double scale = max_counts / peak;

  Measurements out;
  out.scale_factor = scale;
  out.measured.resize(K);
  out.ground_truth.resize(K);
  parallel_for(K, [&](std::size_t i) {
    RealField truth(pos.probe_rows, pos.probe_cols);
    RealField meas(pos.probe_rows, pos.probe_cols);
    Rng stream = Rng::position_stream(seed, i);
    for (std::size_t j = 0; j < intensity[i].size(); ++j) {
      const double scaled = intensity[i][j] * scale;
      truth[j] = std::sqrt(scaled);
      const double counts = poisson ? static_cast<double>(poisson_draw(stream, scaled))
                                    : static_cast<double>(std::llround(scaled));
      meas[j] = std::sqrt(counts);
    }
    out.ground_truth[i] = std::move(truth);
    out.measured[i] = std::move(meas);
  });
  return out;
}

/// Intensity signal-to-noise ratio in dB,
/// 10 log10(sum ||yhat^2||^2 / sum ||y^2 - yhat^2||^2). Returns +inf when the
/// noise power vanishes, including when it is negligible at double precision
/// (below 1e-15 of the signal power).
inline double snr_db(const AmplitudeStack& measured, const AmplitudeStack& ground_truth) {
  if (measured.size() != ground_truth.size()) throw std::invalid_argument("snr_db: stack size mismatch");
  double signal = 0.0;
  double noise = 0.0;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    if (!measured[i].same_shape(ground_truth[i])) {
      throw std::invalid_argument("snr_db: shape mismatch");
    }
    for (std::size_t j = 0; j < measured[i].size(); ++j) {
      const double truth_int = ground_truth[i][j] * ground_truth[i][j];
      const double meas_int = measured[i][j] * measured[i][j];
      signal += truth_int * truth_int;
      noise += (meas_int - truth_int) * (meas_int - truth_int);
    }
  }
  if (noise == 0.0 || noise < 1e-15 * signal) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / noise);
}

/// Deterministic smooth test pattern in [0, 1]; a stand-in for stock imagery
/// when none is supplied.
inline RealField test_pattern(int rows, int cols, std::uint64_t seed) {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("test_pattern: extent must be positive");
  Rng rng(seed * 0x9e3779b97f4a7c15ull + 0x517cc1b727220a95ull);
  struct Wave {
    double fr, fc, phase, weight;
  };
  std::vector<Wave> waves(12);
  for (auto& w : waves) {
    w.fr = (rng.uniform01() - 0.5) * 16.0;
    w.fc = (rng.uniform01() - 0.5) * 16.0;
    w.phase = rng.uniform01() * 2.0 * std::numbers::pi;
    w.weight = 0.3 + rng.uniform01();
  }
  RealField img(rows, cols);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double u = static_cast<double>(r) / rows;
      const double v = static_cast<double>(c) / cols;
      double acc = 0.0;
      for (const auto& w : waves) {
        acc += w.weight * std::sin(2.0 * std::numbers::pi * (w.fr * u + w.fc * v) + w.phase);
      }
      img(r, c) = acc;
      lo = std::min(lo, acc);
      hi = std::max(hi, acc);
    }
  }
  const double span = hi > lo ? hi - lo : 1.0;
  for (double& v : img.values()) v = (v - lo) / span;
  return img;
}

/// Smallest square frame extent that holds every window of a Fermat scan of
/// `count` positions centered in the frame.
inline int fermat_frame_extent(double c, int count, int probe_rows, int probe_cols) {
  const double reach = c * std::sqrt(static_cast<double>(count));
  const int margin = static_cast<int>(std::ceil(reach)) + 1;
  return 2 * margin + std::max(probe_rows, probe_cols);
}

/// Full synthetic acquisition: object from the source images (embedded in a
/// free-space frame big enough for the scan), probe, Fermat scan, scaled and
/// noise-corrupted measurements, SNR. Amplitude payloads are quantized to f32
/// to match the container format.
inline Dataset simulate(const SimulationSpec& spec) {
  spec.validate();
  const ComplexField content =
      synth_object(spec.amp_image, spec.phase_image, spec.phase_range, spec.amp_floor);

  const int needed = fermat_frame_extent(spec.fermat_c, spec.positions, spec.probe_rows,
                                         spec.probe_cols);
  const int frame_rows = std::max(content.rows(), needed);
  const int frame_cols = std::max(content.cols(), needed);
  ComplexField object(frame_rows, frame_cols, cplx{1.0, 0.0});
  const int r_off = (frame_rows - content.rows()) / 2;
  const int c_off = (frame_cols - content.cols()) / 2;
  for (int r = 0; r < content.rows(); ++r) {
    for (int c = 0; c < content.cols(); ++c) object(r_off + r, c_off + c) = content(r, c);
  }

  const ComplexField probe =
      make_probe(spec.probe_kind, spec.probe_radius, spec.probe_rows, spec.probe_cols);
  const ScanPositions pos =
      fermat_positions(spec.fermat_c, spec.positions, frame_rows / 2.0, frame_cols / 2.0,
                       spec.probe_rows, spec.probe_cols, frame_rows, frame_cols);

  Measurements meas = simulate_measurements(probe, object, pos, spec.max_counts,
                                            spec.poisson_noise, spec.seed);
  Dataset ds;
  ds.positions = pos;
  ds.measured = std::move(meas.measured);
  ds.truth_amplitudes = std::move(meas.ground_truth);
  quantize_f32(ds.measured);
  quantize_f32(*ds.truth_amplitudes);
  ds.truth_object = object;
  ds.truth_probe = probe;
  quantize_f32(*ds.truth_object);
  quantize_f32(*ds.truth_probe);
  ds.scale_factor = meas.scale_factor;
  ds.snr_db = snr_db(ds.measured, *ds.truth_amplitudes);
  ds.seed = spec.seed;
  ds.validate();
  return ds;
}

}  // namespace proxpty
