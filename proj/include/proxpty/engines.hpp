#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "proxpty/data.hpp"
#include "proxpty/estimators.hpp"
#include "proxpty/field.hpp"
#include "proxpty/metrics.hpp"
#include "proxpty/model.hpp"
#include "proxpty/parallel.hpp"
#include "proxpty/scan.hpp"

namespace proxpty {

enum class Algorithm { ER, DM, PM, mADMM, APG };

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::ER: return "er";
    case Algorithm::DM: return "dm";
    case Algorithm::PM: return "pm";
    case Algorithm::mADMM: return "madmm";
    case Algorithm::APG: return "apg";
  }
  return "?";
}

struct EngineConfig {
  Algorithm algorithm = Algorithm::ER;
  NoiseModel noise_model = NoiseModel::gaussian();
  double lambda0 = 1.0;
  double beta = 0.5;   // step shrink factor (APG backtracking, mADMM schedule)
  double delta = 0.1;  // mADMM: dual-change threshold; APG: lambda reset floor
  int t_max = 100;
  int inner_iters = 1;
  bool momentum_enabled = true;  // APG only
  int max_backtracks = 20;       // APG only
  double init_probe_radius = 0.0;  // 0 -> probe_rows / 4
  std::uint64_t seed = 0;

  static EngineConfig defaults_for(Algorithm a) {
    EngineConfig cfg;
    cfg.algorithm = a;
    switch (a) {
      case Algorithm::mADMM:
        cfg.beta = 0.7;
        cfg.delta = 1e-5;
        break;
      case Algorithm::APG:
        cfg.beta = 0.5;
        cfg.delta = 0.1;
        break;
      default:
        break;
    }
    return cfg;
  }

  void validate() const {
    if (!(lambda0 > 0.0)) throw std::invalid_argument("EngineConfig: lambda0 must be > 0");
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("EngineConfig: beta must lie in (0,1)");
    if (!(delta >= 0.0)) throw std::invalid_argument("EngineConfig: delta must be >= 0");
    if (t_max < 0) throw std::invalid_argument("EngineConfig: t_max must be >= 0");
    if (inner_iters < 1) throw std::invalid_argument("EngineConfig: inner_iters must be >= 1");
    if (max_backtracks < 0) throw std::invalid_argument("EngineConfig: max_backtracks must be >= 0");
  }
};

/// Full engine state. Which stacks are live depends on the algorithm:
///   ER, PM   : x (current forward stack)
///   DM       : x (translation-consistent stack) and z, which stores the DM
///              w-iterate -- DM keeps no dual stack of its own
///   mADMM    : x, z, u
///   APG      : x, x_prev
struct ReconstructionState {
  ComplexField object;
  ComplexField probe;
  FieldStack x;
  FieldStack z;
  FieldStack u;
  FieldStack x_prev;
  double lambda = 1.0;
  int t = 0;
  std::vector<MetricTraceRecord> trace;

  // APG acceptance bookkeeping for the last completed iteration.
  double last_candidate_nll = std::numeric_limits<double>::quiet_NaN();
  double last_q_bound = std::numeric_limits<double>::quiet_NaN();
  int last_backtracks = 0;
  bool last_flagged = false;

  // mADMM dual residual of the last completed iteration.
  std::optional<double> last_dual_residual;

  // Best data-misfit iterate seen so far (reported alongside the final one).
  double best_nll = std::numeric_limits<double>::infinity();
  int best_t = 0;
  ComplexField best_object;
  ComplexField best_probe;
};

class EngineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Disk illumination guess: amplitude 1 inside a centered disk, zero phase,
/// scaled so its energy matches the mean measured frame energy.
inline ComplexField default_probe_guess(const Dataset& data, double radius = 0.0) {
  const int rows = data.positions.probe_rows;
  const int cols = data.positions.probe_cols;
  if (radius <= 0.0) radius = rows / 4.0;
  ComplexField probe(rows, cols);
  const double cr = rows / 2.0;
  const double cc = cols / 2.0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      probe(r, c) = std::hypot(r - cr, c - cc) <= radius ? cplx{1.0, 0.0} : cplx{0.0, 0.0};
    }
  }
  double frame_energy = 0.0;
  for (const auto& g : data.measured) {
    for (double v : g.values()) frame_energy += v * v;
  }
  frame_energy /= static_cast<double>(data.measured.size());
  const double probe_energy = squared_norm(probe);
  if (probe_energy > 0.0 && frame_energy > 0.0) {
    const double gain = std::sqrt(frame_energy / probe_energy);
    for (cplx& v : probe.values()) v *= gain;
  }
  return probe;
}

/// Initial engine state: user-supplied or default guesses, forward stacks,
/// zeroed duals, step size at lambda0.
inline ReconstructionState init_state(const Dataset& data, const EngineConfig& cfg,
                                      const ComplexField* probe_init = nullptr,
                                      const ComplexField* object_init = nullptr) {
  data.validate();
  cfg.validate();
  ReconstructionState st;
  if (object_init) {
    if (object_init->rows() != data.positions.object_rows ||
        object_init->cols() != data.positions.object_cols) {
      throw std::invalid_argument("init_state: object guess shape mismatch");
    }
    st.object = *object_init;
  } else {
    st.object = ComplexField(data.positions.object_rows, data.positions.object_cols, cplx{1.0, 0.0});
  }
  if (probe_init) {
    if (probe_init->rows() != data.positions.probe_rows ||
        probe_init->cols() != data.positions.probe_cols) {
      throw std::invalid_argument("init_state: probe guess shape mismatch");
    }
    st.probe = *probe_init;
  } else {
    st.probe = default_probe_guess(data, cfg.init_probe_radius);
  }
  st.x = forward_all(st.probe, st.object, data.positions);
  switch (cfg.algorithm) {
    case Algorithm::DM:
      st.z = st.x;  // w-iterate
      break;
    case Algorithm::mADMM: {
      st.z = st.x;
      const std::size_t K = st.x.size();
      st.u.resize(K);
      for (std::size_t i = 0; i < K; ++i) {
        st.u[i] = ComplexField(data.positions.probe_rows, data.positions.probe_cols);
      }
      break;
    }
    case Algorithm::APG:
      st.x_prev = st.x;
      break;
    default:
      break;
  }
  st.lambda = cfg.lambda0;
  return st;
}

/// One error-reduction iteration: modulus projection, then the collective
/// translation projection.
inline void step_er(ReconstructionState& st, const Dataset& data, const EngineConfig& cfg) {
  const FieldStack z = project_modulus(st.x, data.measured);
  st.x = project_translation(st.object, st.probe, z, data.positions, cfg.inner_iters);
}

/// One proximal-minimization iteration: the modulus projection of ER is
/// replaced by the MAP amplitude estimate at fixed lambda.
inline void step_pm(ReconstructionState& st, const Dataset& data, const EngineConfig& cfg) {
  const FieldStack z = map_estimate(st.lambda, data.measured, st.x, cfg.noise_model);
  st.x = project_translation(st.object, st.probe, z, data.positions, cfg.inner_iters);
}

/// One difference-map iteration, with w stored in the z slot:
///   x = Pi_g(w);  w += Pi_f(2x - w) - x.
inline void step_dm(ReconstructionState& st, const Dataset& data, const EngineConfig& cfg) {
  FieldStack& w = st.z;
  st.x = project_translation(st.object, st.probe, w, data.positions, cfg.inner_iters);
  const FieldStack reflected = lincomb(2.0, st.x, -1.0, w);
  const FieldStack constrained = project_modulus(reflected, data.measured);
  parallel_for(w.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < w[i].size(); ++j) {
      w[i][j] += constrained[i][j] - st.x[i][j];
    }
  });
}

/// One multi-stage ADMM iteration. The dual residual uses the stacked 2-norm;
/// when the dual is identically zero the residual counts as 0, which triggers
/// the lambda reduction.
inline void step_madmm(ReconstructionState& st, const Dataset& data, const EngineConfig& cfg) {
  const FieldStack target_in = lincomb(1.0, st.z, -1.0, st.u);
  st.x = map_estimate(st.lambda, data.measured, target_in, cfg.noise_model);
  const FieldStack target_out = lincomb(1.0, st.x, 1.0, st.u);
  st.z = project_translation(st.object, st.probe, target_out, data.positions, cfg.inner_iters);
  double change_sq = 0.0;
  for (std::size_t i = 0; i < st.u.size(); ++i) {
    for (std::size_t j = 0; j < st.u[i].size(); ++j) {
      const cplx d = st.x[i][j] - st.z[i][j];
      st.u[i][j] += d;
      change_sq += std::norm(d);
    }
  }
  const double dual_norm = norm(st.u);
  const double residual = dual_norm > 0.0 ? std::sqrt(change_sq) / dual_norm : 0.0;
  st.last_dual_residual = residual;
  if (residual < cfg.delta) st.lambda *= cfg.beta;
}

/// One accelerated-proximal-gradient iteration: extrapolate, take a gradient
/// step on the likelihood, project onto the translation set, and accept only
/// if the majorizer bound holds, shrinking lambda otherwise. When the
/// backtrack budget runs out the last candidate is accepted and flagged.
/// lambda carries across iterations and resets to lambda0 below delta.
inline void step_apg(ReconstructionState& st, const Dataset& data, const EngineConfig& cfg) {
  const double omega =
      cfg.momentum_enabled ? static_cast<double>(st.t) / (st.t + 3.0) : 0.0;
  const FieldStack w = omega != 0.0 ? lincomb(1.0 + omega, st.x, -omega, st.x_prev) : st.x;
  const double nll_w = nll(data.measured, w, cfg.noise_model);
  const FieldStack grad = grad_nll(data.measured, w, cfg.noise_model);

  int backtracks = 0;
  for (;;) {
    const FieldStack candidate = lincomb(1.0, w, cplx{-st.lambda, 0.0}, grad);
    ComplexField object_try = st.object;
    ComplexField probe_try = st.probe;
    FieldStack z =
        project_translation(object_try, probe_try, candidate, data.positions, cfg.inner_iters);
    const double nll_z = nll(data.measured, z, cfg.noise_model);
    const double q = detail::q_upper_bound_given(nll_w, grad, z, w, st.lambda);
    const bool accepted = nll_z <= q;
    if (accepted || backtracks >= cfg.max_backtracks) {
      st.x_prev = std::move(st.x);
      st.x = std::move(z);
      st.object = std::move(object_try);
      st.probe = std::move(probe_try);
      st.last_candidate_nll = nll_z;
      st.last_q_bound = q;
      st.last_backtracks = backtracks;
      st.last_flagged = !accepted;
      break;
    }
    st.lambda *= cfg.beta;
    ++backtracks;
  }
  if (st.lambda < cfg.delta) st.lambda = cfg.lambda0;
}

inline void step(ReconstructionState& st, const Dataset& data, const EngineConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::ER: step_er(st, data, cfg); break;
    case Algorithm::DM: step_dm(st, data, cfg); break;
    case Algorithm::PM: step_pm(st, data, cfg); break;
    case Algorithm::mADMM: step_madmm(st, data, cfg); break;
    case Algorithm::APG: step_apg(st, data, cfg); break;
  }
}

/// Called after every completed iteration with the updated state.
using IterationHook = std::function<void(const ReconstructionState&)>;

namespace detail {

/// Data misfit of the engine's physical iterate: the forward stack for
/// ER/PM/APG (x) and the translation-consistent stack for DM/mADMM (x and z
/// respectively).
inline double reported_nll(const ReconstructionState& st, const Dataset& data,
                           const EngineConfig& cfg) {
  const FieldStack& stack = cfg.algorithm == Algorithm::mADMM ? st.z : st.x;
  return nll(data.measured, stack, cfg.noise_model);
}

}  // namespace detail

/// Runs t_max iterations of the configured engine. When the dataset carries a
/// ground-truth object, the scalar-ambiguity-corrected RMSE over the
/// illuminated region is recorded each iteration. A non-finite state aborts
/// with an EngineError diagnostic.
inline ReconstructionState run(const Dataset& data, const EngineConfig& cfg,
                               const ComplexField* probe_init = nullptr,
                               const ComplexField* object_init = nullptr,
                               const IterationHook& hook = {}) {
  ReconstructionState st = init_state(data, cfg, probe_init, object_init);
  st.trace.reserve(static_cast<std::size_t>(cfg.t_max));
  std::vector<std::uint8_t> mask;
  if (data.truth_object) mask = illuminated_mask(data.positions);
  const bool deterministic = runtime_config().deterministic;
  for (int t = 0; t < cfg.t_max; ++t) {
    const auto started = std::chrono::steady_clock::now();
    step(st, data, cfg);
    st.t = t + 1;
    MetricTraceRecord rec;
    rec.t = st.t;
    rec.nll = detail::reported_nll(st, data, cfg);
    rec.lambda = st.lambda;
    rec.backtracks = cfg.algorithm == Algorithm::APG ? st.last_backtracks : 0;
    rec.dual_residual = cfg.algorithm == Algorithm::mADMM ? st.last_dual_residual : std::nullopt;
    if (data.truth_object) rec.rmse = rmse(st.object, *data.truth_object, &mask);
    rec.wall_time =
        deterministic ? 0.0
                      : std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                            .count();
    if (!std::isfinite(rec.nll) || !std::isfinite(st.lambda) || !is_finite(st.object) ||
        !is_finite(st.probe)) {
      throw EngineError("engine state became non-finite at iteration " + std::to_string(st.t) +
                        " (" + std::string(algorithm_name(cfg.algorithm)) + ")");
    }
    if (rec.nll < st.best_nll) {
      st.best_nll = rec.nll;
      st.best_t = st.t;
      st.best_object = st.object;
      st.best_probe = st.probe;
    }
    st.trace.push_back(rec);
    if (hook) hook(st);
  }
  return st;
}

}  // namespace proxpty
