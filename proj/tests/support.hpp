#pragma once

// Shared helpers and independent oracles for the test suites. Everything in
// here is deliberately naive (dense DFT, scalar golden-section search, dense
// Gaussian elimination) so implementation results can be checked against a
// second route.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "proxpty/proxpty.hpp"

namespace testsupport {

using proxpty::AmplitudeStack;
using proxpty::ComplexField;
using proxpty::cplx;
using proxpty::FieldStack;
using proxpty::RealField;
using proxpty::Rng;
using proxpty::ScanPositions;

inline ComplexField random_field(int rows, int cols, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  ComplexField f(rows, cols);
  for (cplx& v : f.values()) {
    v = cplx((rng.uniform01() * 2.0 - 1.0) * scale, (rng.uniform01() * 2.0 - 1.0) * scale);
  }
  return f;
}

inline RealField random_amplitude(int rows, int cols, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  RealField f(rows, cols);
  for (double& v : f.values()) v = rng.uniform01() * scale;
  return f;
}

inline FieldStack random_stack(int count, int rows, int cols, std::uint64_t seed,
                               double scale = 1.0) {
  FieldStack s;
  for (int i = 0; i < count; ++i) {
    s.push_back(random_field(rows, cols, seed + 1000u * static_cast<std::uint64_t>(i + 1), scale));
  }
  return s;
}

inline AmplitudeStack random_amplitude_stack(int count, int rows, int cols, std::uint64_t seed,
                                             double scale = 1.0) {
  AmplitudeStack s;
  for (int i = 0; i < count; ++i) {
    s.push_back(
        random_amplitude(rows, cols, seed + 777u * static_cast<std::uint64_t>(i + 1), scale));
  }
  return s;
}

/// Direct O(n^2 m^2) evaluation of the unitary 2-D DFT.
inline ComplexField naive_dft2(const ComplexField& in, bool inverse) {
  const int rows = in.rows();
  const int cols = in.cols();
  const double sign = inverse ? 1.0 : -1.0;
  ComplexField out(rows, cols);
  for (int kr = 0; kr < rows; ++kr) {
    for (int kc = 0; kc < cols; ++kc) {
      cplx acc{0.0, 0.0};
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
          const double angle = sign * 2.0 * std::numbers::pi *
                               (static_cast<double>(kr) * r / rows +
                                static_cast<double>(kc) * c / cols);
          acc += in(r, c) * std::polar(1.0, angle);
        }
      }
      out(kr, kc) = acc / std::sqrt(static_cast<double>(rows) * cols);
    }
  }
  return out;
}

/// Golden-section search for the minimizer of a unimodal scalar function on
/// [lo, hi]. Iterates to interval widths near floating-point resolution.
inline double golden_minimize(const std::function<double(double)>& f, double lo, double hi,
                              int iterations = 200) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int i = 0; i < iterations && b - a > 1e-14 * (1.0 + std::abs(a) + std::abs(b)); ++i) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

/// Dense complex linear solve by Gaussian elimination with partial pivoting.
inline std::vector<cplx> solve_dense(std::vector<std::vector<cplx>> a, std::vector<cplx> b) {
  const std::size_t n = a.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) == 0.0) throw std::runtime_error("solve_dense: singular matrix");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const cplx factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
      b[r] -= factor * b[col];
    }
  }
  std::vector<cplx> x(n);
  for (std::size_t r = n; r-- > 0;) {
    cplx acc = b[r];
    for (std::size_t c = r + 1; c < n; ++c) acc -= a[r][c] * x[c];
    x[r] = acc / a[r][r];
  }
  return x;
}

/// Indicator-constrained ADMM, the reference route the difference map must
/// reproduce: x = Pi_f(z - u); z = Pi_g(x + u); u += x - z.
struct IndicatorAdmmOracle {
  ComplexField object;
  ComplexField probe;
  FieldStack z;
  FieldStack u;

  IndicatorAdmmOracle(const ComplexField& object0, const ComplexField& probe0,
                      const FieldStack& z0)
      : object(object0), probe(probe0), z(z0) {
    u.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      u[i] = ComplexField(z[i].rows(), z[i].cols());
    }
  }

  void step(const proxpty::Dataset& data, int inner_iters) {
    const FieldStack x =
        proxpty::project_modulus(proxpty::lincomb(1.0, z, -1.0, u), data.measured);
    const FieldStack target = proxpty::lincomb(1.0, x, 1.0, u);
    z = proxpty::project_translation(object, probe, target, data.positions, inner_iters);
    for (std::size_t i = 0; i < u.size(); ++i) {
      for (std::size_t j = 0; j < u[i].size(); ++j) u[i][j] += x[i][j] - z[i][j];
    }
  }

  FieldStack w_equivalent() const { return proxpty::lincomb(1.0, z, 1.0, u); }
};

/// Small noise-free or noisy synthetic problem with a full-support probe and
/// a dense Fermat scan; the workhorse instance for engine tests.
struct TestProblem {
  proxpty::Dataset dataset;
  ComplexField truth_object;
  ComplexField truth_probe;
};

inline TestProblem make_problem(int object_extent, int probe_extent, int positions, double c,
                                double max_counts, bool poisson, std::uint64_t seed,
                                proxpty::ProbeKind kind = proxpty::ProbeKind::Fzp,
                                double probe_radius = 0.0) {
  proxpty::SimulationSpec spec;
  spec.amp_image = proxpty::test_pattern(object_extent, object_extent, seed ^ 0xabcd01ull);
  spec.phase_image = proxpty::test_pattern(object_extent, object_extent, seed ^ 0xabcd02ull);
  spec.phase_range = 1.0;
  spec.probe_kind = kind;
  spec.probe_radius = probe_radius > 0.0 ? probe_radius : probe_extent / 4.0;
  spec.probe_rows = probe_extent;
  spec.probe_cols = probe_extent;
  spec.fermat_c = c;
  spec.positions = positions;
  spec.max_counts = max_counts;
  spec.poisson_noise = poisson;
  spec.seed = seed;
  TestProblem problem;
  problem.dataset = proxpty::simulate(spec);
  problem.truth_object = *problem.dataset.truth_object;
  problem.truth_probe = *problem.dataset.truth_probe;
  return problem;
}

}  // namespace testsupport
