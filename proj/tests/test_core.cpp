#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace proxpty;
using testsupport::random_field;
using testsupport::random_stack;
using testsupport::solve_dense;

namespace {

ScanPositions single_position(int probe, int object, int r0 = 0, int c0 = 0) {
  ScanPositions pos;
  pos.probe_rows = pos.probe_cols = probe;
  pos.object_rows = pos.object_cols = object;
  pos.offsets = {{r0, c0}};
  pos.validate();
  return pos;
}

}  // namespace

TEST_CASE("extract is a pure windowed read", "[scan]") {
  ComplexField o(4, 4);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) o(r, c) = cplx(4.0 * r + c, 0.0);
  }

  SECTION("identity selection returns a copy") {
    const auto pos = single_position(4, 4);
    const ComplexField patch = extract(o, pos, 0);
    REQUIRE(max_abs_diff(patch, o) == 0.0);
  }

  SECTION("interior window picks the numbered entries") {
    ScanPositions pos;
    pos.probe_rows = pos.probe_cols = 2;
    pos.object_rows = pos.object_cols = 4;
    pos.offsets = {{1, 1}};
    const ComplexField patch = extract(o, pos, 0);
    REQUIRE(patch(0, 0) == cplx{5.0, 0.0});
    REQUIRE(patch(0, 1) == cplx{6.0, 0.0});
    REQUIRE(patch(1, 0) == cplx{9.0, 0.0});
    REQUIRE(patch(1, 1) == cplx{10.0, 0.0});

    const ComplexField again = extract(o, pos, 0);
    REQUIRE(max_abs_diff(patch, again) == 0.0);
  }

  SECTION("index out of range throws") {
    const auto pos = single_position(4, 4);
    REQUIRE_THROWS_AS(extract(o, pos, 1), std::out_of_range);
    REQUIRE_THROWS_AS(extract(o, pos, -1), std::out_of_range);
  }
}

TEST_CASE("embed accumulates instead of overwriting", "[scan]") {
  ScanPositions pos;
  pos.probe_rows = pos.probe_cols = 2;
  pos.object_rows = pos.object_cols = 4;
  pos.offsets = {{0, 0}, {1, 1}};
  pos.validate();

  ComplexField buffer(4, 4);
  const ComplexField ones(2, 2, cplx{1.0, 0.0});

  embed_accumulate(buffer, pos, 0, ones);
  REQUIRE(buffer(0, 0) == cplx{1.0, 0.0});
  REQUIRE(buffer(2, 2) == cplx{0.0, 0.0});

  embed_accumulate(buffer, pos, 1, ones);
  REQUIRE(buffer(1, 1) == cplx{2.0, 0.0});  // overlap region
  REQUIRE(buffer(0, 0) == cplx{1.0, 0.0});
  REQUIRE(buffer(2, 2) == cplx{1.0, 0.0});

  ComplexField bad(3, 3);
  REQUIRE_THROWS_AS(embed_accumulate(buffer, pos, 0, bad), std::invalid_argument);
  REQUIRE_THROWS_AS(embed_accumulate(buffer, pos, 5, ones), std::out_of_range);
}

TEST_CASE("extract and embed form an adjoint pair", "[scan]") {
  ScanPositions pos;
  pos.probe_rows = 3;
  pos.probe_cols = 5;
  pos.object_rows = 9;
  pos.object_cols = 11;
  pos.offsets = {{2, 3}, {0, 0}, {6, 6}};
  pos.validate();

  for (int i = 0; i < pos.count(); ++i) {
    const ComplexField a = random_field(9, 11, 100u + static_cast<std::uint64_t>(i));
    const ComplexField b = random_field(3, 5, 200u + static_cast<std::uint64_t>(i));
    ComplexField embedded(9, 11);
    embed_accumulate(embedded, pos, i, b);
    const cplx lhs = dot(extract(a, pos, i), b);
    const cplx rhs = dot(a, embedded);
    REQUIRE(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(lhs)));
  }
}

TEST_CASE("forward composes window, product and transform", "[model]") {
  SECTION("all-ones probe over an all-ones object concentrates at DC") {
    const ComplexField p(2, 2, cplx{1.0, 0.0});
    const ComplexField o(4, 4, cplx{1.0, 0.0});
    const auto pos = single_position(2, 4);
    const ComplexField x = forward(p, o, pos, 0);
    REQUIRE(std::abs(x(0, 0) - cplx{2.0, 0.0}) < 1e-14);
    REQUIRE(std::abs(x(0, 1)) < 1e-14);
    REQUIRE(std::abs(x(1, 0)) < 1e-14);
    REQUIRE(std::abs(x(1, 1)) < 1e-14);
  }

  SECTION("zero probe yields a zero field") {
    const ComplexField p(3, 3);
    const ComplexField o = random_field(6, 6, 5u);
    const auto pos = single_position(3, 6, 1, 2);
    REQUIRE(norm(forward(p, o, pos, 0)) == 0.0);
  }

  SECTION("modulus is invariant under a global phase on the object") {
    const ComplexField p = random_field(4, 4, 6u);
    const ComplexField o = random_field(8, 8, 7u);
    const auto pos = single_position(4, 8, 2, 3);
    const cplx phase = std::polar(1.0, 1.234);
    ComplexField o2 = o;
    for (cplx& v : o2.values()) v *= phase;
    const ComplexField x1 = forward(p, o, pos, 0);
    const ComplexField x2 = forward(p, o2, pos, 0);
    for (std::size_t j = 0; j < x1.size(); ++j) {
      REQUIRE(std::abs(std::abs(x1[j]) - std::abs(x2[j])) < 1e-12);
    }
  }
}

TEST_CASE("modulus projection keeps phase and forces amplitude", "[model]") {
  SECTION("worked example 3+4i at target 10") {
    ComplexField v(1, 1);
    v(0, 0) = {3.0, 4.0};
    RealField y(1, 1, 10.0);
    const ComplexField out = project_modulus(v, y);
    REQUIRE(std::abs(out(0, 0) - cplx{6.0, 8.0}) < 1e-12);
  }

  SECTION("zero input stays zero regardless of target") {
    ComplexField v(1, 1);
    RealField y(1, 1, 5.0);
    REQUIRE(project_modulus(v, y)(0, 0) == cplx{0.0, 0.0});
  }

  SECTION("already-consistent input is returned exactly") {
    const ComplexField v = random_field(5, 5, 9u);
    RealField y(5, 5);
    for (std::size_t j = 0; j < v.size(); ++j) y[j] = std::abs(v[j]);
    const ComplexField out = project_modulus(v, y);
    REQUIRE(max_abs_diff(out, v) < 1e-13);
  }

  SECTION("negative target rejected") {
    ComplexField v(1, 1, cplx{1.0, 0.0});
    RealField y(1, 1, -1.0);
    REQUIRE_THROWS_AS(project_modulus(v, y), std::invalid_argument);
  }

  SECTION("idempotent and a Euclidean projection") {
    const ComplexField v = random_field(6, 6, 11u, 2.0);
    const RealField y = testsupport::random_amplitude(6, 6, 12u, 3.0);
    const ComplexField once = project_modulus(v, y);
    const ComplexField twice = project_modulus(once, y);
    // reprojection only re-rounds the phase factor: a couple of ulps at most
    REQUIRE(max_abs_diff(once, twice) <= 4.0 * std::numeric_limits<double>::epsilon() * 3.0);

    // No other point with the prescribed modulus is closer to v.
    Rng rng(13u);
    for (int trial = 0; trial < 25; ++trial) {
      ComplexField w(6, 6);
      for (std::size_t j = 0; j < w.size(); ++j) {
        w[j] = std::polar(y[j], rng.uniform01() * 2.0 * std::numbers::pi);
      }
      double d_proj = 0.0;
      double d_other = 0.0;
      for (std::size_t j = 0; j < w.size(); ++j) {
        d_proj += std::norm(once[j] - v[j]);
        d_other += std::norm(w[j] - v[j]);
      }
      REQUIRE(d_proj <= d_other + 1e-12);
    }
  }
}

TEST_CASE("object update solves the windowed least squares", "[model]") {
  SECTION("single full-frame position with unit probe inverts the transform") {
    const int n = 4;
    const ComplexField p(n, n, cplx{1.0, 0.0});
    const auto pos = single_position(n, n);
    const FieldStack v = {random_field(n, n, 21u)};
    const ComplexField o = update_object(p, v, pos);
    REQUIRE(max_abs_diff(o, ifft2_unitary(v[0])) < 1e-13);
  }

  SECTION("overlapping unit-probe windows average the back-propagations") {
    ScanPositions pos;
    pos.probe_rows = pos.probe_cols = 2;
    pos.object_rows = pos.object_cols = 4;
    pos.offsets = {{0, 0}, {1, 1}};
    pos.validate();
    const ComplexField p(2, 2, cplx{1.0, 0.0});
    const FieldStack v = {random_field(2, 2, 22u), random_field(2, 2, 23u)};
    const ComplexField o = update_object(p, v, pos);

    const ComplexField b0 = ifft2_unitary(v[0]);
    const ComplexField b1 = ifft2_unitary(v[1]);
    REQUIRE(std::abs(o(1, 1) - 0.5 * (b0(1, 1) + b1(0, 0))) < 1e-13);
    REQUIRE(std::abs(o(0, 0) - b0(0, 0)) < 1e-13);
    REQUIRE(std::abs(o(2, 2) - b1(1, 1)) < 1e-13);
  }

  SECTION("matches a dense normal-equations oracle on covered pixels") {
    ScanPositions pos;
    pos.probe_rows = pos.probe_cols = 2;
    pos.object_rows = pos.object_cols = 4;
    pos.offsets = {{0, 0}, {1, 1}, {2, 2}, {0, 2}};
    pos.validate();
    const ComplexField p = random_field(2, 2, 24u);
    const FieldStack v = random_stack(4, 2, 2, 25u);
    const ComplexField o = update_object(p, v, pos);

    // Dense route: assemble A (rows = stacked transformed windows) over the
    // 16 object pixels and solve A^H A x = A^H b restricted to pixels with
    // nonzero illumination.
    const int n_px = 16;
    std::vector<std::vector<cplx>> a_rows;
    std::vector<cplx> b;
    for (int i = 0; i < pos.count(); ++i) {
      for (int kr = 0; kr < 2; ++kr) {
        for (int kc = 0; kc < 2; ++kc) {
          std::vector<cplx> row(n_px, cplx{0.0, 0.0});
          for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < 2; ++c) {
              ComplexField unit(2, 2);
              unit(r, c) = p(r, c);
              const ComplexField col = fft2_unitary(unit);
              const auto [r0, c0] = pos.offsets[static_cast<std::size_t>(i)];
              row[(r0 + r) * 4 + (c0 + c)] += col(kr, kc);
            }
          }
          a_rows.push_back(std::move(row));
          b.push_back(v[static_cast<std::size_t>(i)](kr, kc));
        }
      }
    }
    std::vector<std::vector<cplx>> ata(n_px, std::vector<cplx>(n_px, cplx{0.0, 0.0}));
    std::vector<cplx> atb(n_px, cplx{0.0, 0.0});
    for (std::size_t row = 0; row < a_rows.size(); ++row) {
      for (int j = 0; j < n_px; ++j) {
        atb[j] += std::conj(a_rows[row][j]) * b[row];
        for (int k = 0; k < n_px; ++k) {
          ata[j][k] += std::conj(a_rows[row][j]) * a_rows[row][k];
        }
      }
    }
    // Regularize uncovered pixels so the dense solve stays nonsingular; the
    // update maps them to zero by convention.
    for (int j = 0; j < n_px; ++j) {
      if (std::abs(ata[j][j]) < 1e-12) ata[j][j] = 1.0;
    }
    const std::vector<cplx> oracle = solve_dense(ata, atb);
    for (int j = 0; j < n_px; ++j) {
      REQUIRE(std::abs(o[static_cast<std::size_t>(j)] - oracle[static_cast<std::size_t>(j)]) <
              1e-10);
    }
  }

  SECTION("uncovered pixels stay zero") {
    ScanPositions pos;
    pos.probe_rows = pos.probe_cols = 2;
    pos.object_rows = pos.object_cols = 4;
    pos.offsets = {{0, 0}};
    pos.validate();
    const ComplexField p(2, 2, cplx{1.0, 0.0});
    const FieldStack v = {random_field(2, 2, 26u)};
    const ComplexField o = update_object(p, v, pos);
    REQUIRE(o(3, 3) == cplx{0.0, 0.0});
    REQUIRE(o(0, 2) == cplx{0.0, 0.0});
  }

  SECTION("no illumination anywhere is an error") {
    const auto pos = single_position(2, 4);
    const ComplexField p(2, 2);  // all-zero probe
    const FieldStack v = {random_field(2, 2, 27u)};
    REQUIRE_THROWS_AS(update_object(p, v, pos), std::invalid_argument);
  }

  SECTION("normal-equation residual vanishes after the update") {
    ScanPositions pos;
    pos.probe_rows = pos.probe_cols = 4;
    pos.object_rows = pos.object_cols = 8;
    pos.offsets = {{0, 0}, {2, 2}, {4, 4}, {0, 4}, {4, 0}};
    pos.validate();
    const ComplexField p = random_field(4, 4, 28u);
    const FieldStack v = random_stack(5, 4, 4, 29u);
    const ComplexField o = update_object(p, v, pos);

    ComplexField numerator(8, 8);
    RealField weight(8, 8);
    for (int i = 0; i < pos.count(); ++i) {
      const ComplexField bp = ifft2_unitary(v[static_cast<std::size_t>(i)]);
      const auto [r0, c0] = pos.offsets[static_cast<std::size_t>(i)];
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
          numerator(r0 + r, c0 + c) += std::conj(p(r, c)) * bp(r, c);
          weight(r0 + r, c0 + c) += std::norm(p(r, c));
        }
      }
    }
    double residual_sq = 0.0;
    double numerator_sq = 0.0;
    double max_w = 0.0;
    for (double w : weight.values()) max_w = std::max(max_w, w);
    for (std::size_t j = 0; j < o.size(); ++j) {
      numerator_sq += std::norm(numerator[j]);
      if (weight[j] > kDenominatorFloor * max_w) {
        residual_sq += std::norm(weight[j] * o[j] - numerator[j]);
      }
    }
    REQUIRE(std::sqrt(residual_sq) <= 1e-8 * std::sqrt(numerator_sq));
  }
}

TEST_CASE("probe update mirrors the object update", "[model]") {
  SECTION("single position with unit object patch inverts the transform") {
    const auto pos = single_position(3, 6, 1, 1);
    const ComplexField o(6, 6, cplx{1.0, 0.0});
    const FieldStack v = {random_field(3, 3, 31u)};
    const ComplexField p = update_probe(o, v, pos);
    REQUIRE(max_abs_diff(p, ifft2_unitary(v[0])) < 1e-13);
  }

  SECTION("constant object patches give the closed-form average") {
    ScanPositions pos;
    pos.probe_rows = pos.probe_cols = 2;
    pos.object_rows = pos.object_cols = 6;
    pos.offsets = {{0, 0}, {2, 2}, {4, 4}};
    pos.validate();
    const cplx constant{0.8, -0.6};
    const ComplexField o(6, 6, constant);
    const FieldStack v = random_stack(3, 2, 2, 32u);
    const ComplexField p = update_probe(o, v, pos);

    ComplexField expected(2, 2);
    for (const auto& vi : v) {
      const ComplexField bp = ifft2_unitary(vi);
      for (std::size_t j = 0; j < expected.size(); ++j) {
        expected[j] += std::conj(constant) * bp[j];
      }
    }
    const double scale = 1.0 / (3.0 * std::norm(constant));
    for (std::size_t j = 0; j < expected.size(); ++j) expected[j] *= scale;
    REQUIRE(max_abs_diff(p, expected) < 1e-12);
  }

  SECTION("probe pixels without object weight go to zero") {
    const auto pos = single_position(2, 4, 1, 1);
    ComplexField o(4, 4, cplx{1.0, 0.0});
    o(1, 1) = {0.0, 0.0};  // zero object under probe pixel (0,0)
    const FieldStack v = {random_field(2, 2, 33u)};
    const ComplexField p = update_probe(o, v, pos);
    REQUIRE(p(0, 0) == cplx{0.0, 0.0});
  }

  SECTION("normal-equation residual vanishes after the update") {
    ScanPositions pos;
    pos.probe_rows = pos.probe_cols = 4;
    pos.object_rows = pos.object_cols = 8;
    pos.offsets = {{0, 0}, {1, 3}, {4, 2}};
    pos.validate();
    const ComplexField o = random_field(8, 8, 34u);
    const FieldStack v = random_stack(3, 4, 4, 35u);
    const ComplexField p = update_probe(o, v, pos);

    ComplexField numerator(4, 4);
    RealField weight(4, 4);
    for (int i = 0; i < pos.count(); ++i) {
      const ComplexField bp = ifft2_unitary(v[static_cast<std::size_t>(i)]);
      const ComplexField patch = extract(o, pos, i);
      for (std::size_t j = 0; j < numerator.size(); ++j) {
        numerator[j] += std::conj(patch[j]) * bp[j];
        weight[j] += std::norm(patch[j]);
      }
    }
    double residual_sq = 0.0;
    double numerator_sq = 0.0;
    double max_w = 0.0;
    for (double w : weight.values()) max_w = std::max(max_w, w);
    for (std::size_t j = 0; j < p.size(); ++j) {
      numerator_sq += std::norm(numerator[j]);
      if (weight[j] > kDenominatorFloor * max_w) {
        residual_sq += std::norm(weight[j] * p[j] - numerator[j]);
      }
    }
    REQUIRE(std::sqrt(residual_sq) <= 1e-8 * std::sqrt(numerator_sq));
  }
}

TEST_CASE("translation projection", "[model]") {
  ScanPositions pos;
  pos.probe_rows = pos.probe_cols = 4;
  pos.object_rows = pos.object_cols = 8;
  pos.offsets = {{0, 0}, {2, 2}, {4, 4}, {0, 4}, {4, 0}, {2, 0}};
  pos.validate();

  SECTION("a consistent stack is a fixed point") {
    ComplexField o = random_field(8, 8, 41u);
    ComplexField p = random_field(4, 4, 42u);
    const FieldStack v = forward_all(p, o, pos);
    FieldStack out = project_translation(o, p, v, pos, 1);
    const double scale = norm(v);
    REQUIRE(max_abs_diff(out, v) <= 1e-10 * scale);
  }

  SECTION("residual is non-increasing in the inner iteration count") {
    const FieldStack v = random_stack(6, 4, 4, 43u);
    double previous = std::numeric_limits<double>::infinity();
    for (int inner = 1; inner <= 3; ++inner) {
      ComplexField o(8, 8, cplx{1.0, 0.0});
      ComplexField p(4, 4, cplx{0.5, 0.0});
      project_translation(o, p, v, pos, inner);
      const double residual = translation_residual(o, p, v, pos);
      REQUIRE(residual <= previous + 1e-12);
      previous = residual;
    }
  }

  SECTION("bit-exact across repeated runs") {
    const FieldStack v = random_stack(6, 4, 4, 44u);
    ComplexField o1(8, 8, cplx{1.0, 0.0});
    ComplexField p1(4, 4, cplx{0.5, 0.0});
    const FieldStack out1 = project_translation(o1, p1, v, pos, 2);
    ComplexField o2(8, 8, cplx{1.0, 0.0});
    ComplexField p2(4, 4, cplx{0.5, 0.0});
    const FieldStack out2 = project_translation(o2, p2, v, pos, 2);
    REQUIRE(max_abs_diff(out1, out2) == 0.0);
    REQUIRE(max_abs_diff(o1, o2) == 0.0);
    REQUIRE(max_abs_diff(p1, p2) == 0.0);
  }

  SECTION("inner_iters below one is rejected") {
    ComplexField o(8, 8, cplx{1.0, 0.0});
    ComplexField p(4, 4, cplx{1.0, 0.0});
    const FieldStack v = random_stack(6, 4, 4, 45u);
    REQUIRE_THROWS_AS(project_translation(o, p, v, pos, 0), std::invalid_argument);
  }
}
