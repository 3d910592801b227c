#include <doctest.h>

#include <cmath>
#include <vector>

#include "qsint/algebra.hpp"

using namespace qsint;

namespace {

const ScalarField X = ScalarField::xi();
const ScalarField Y = ScalarField::eta();

Real coeff_at(const DiffOp& op, int i, int j, Point p, const ParamEnv& env = {}) {
  return value(op.coefficient({i, j}), p, env);
}

// every term of `a - b` vanishes at the points
Real distance(const DiffOp& a, const DiffOp& b, std::span<const Point> pts, const ParamEnv& env = {}) {
  return max_coeff(a - b, pts, env);
}

const std::vector<Point> kPts = {{0.7, 1.3}, {1.1, 0.4}, {1.9, 1.6}, {0.35, 0.9}};

}  // namespace

TEST_CASE("sums and scalings") {
  const DiffOp P = DiffOp::term(X * Y, 2, 1) + DiffOp::term(exp(X), 0, 1);
  CHECK(max_coeff(P + (-1.0) * P, kPts, {}) == 0);
  const DiffOp s = 2.0 * DiffOp::partial(1, 0);
  CHECK(s.terms().size() == 1);
  CHECK(coeff_at(s, 1, 0, {0.3, 0.2}) == 2);
  const DiffOp t = X * DiffOp::partial(0, 1);
  CHECK(coeff_at(t, 0, 1, {0.3, 0.2}) == doctest::Approx(0.3));
  CHECK(DiffOp().order() == 0);
  CHECK(P.order() == 3);
}

TEST_CASE("Leibniz composition") {
  const ScalarField f = sin(X) * Y;
  const DiffOp c = DiffOp::partial(1, 0) * DiffOp::multiplication(f);
  const Point p{0.4, 1.5};
  CHECK(coeff_at(c, 1, 0, p) == doctest::Approx(std::sin(0.4) * 1.5));
  CHECK(coeff_at(c, 0, 0, p) == doctest::Approx(std::cos(0.4) * 1.5));

  const DiffOp xy = DiffOp::partial(1, 0) * DiffOp::partial(0, 1);
  CHECK(xy.terms().size() == 1);
  CHECK(coeff_at(xy, 1, 1, p) == 1);

  const DiffOp euler = X * DiffOp::partial(1, 0);
  const DiffOp sq = euler * euler;
  CHECK(distance(sq, DiffOp::term(X * X, 2, 0) + DiffOp::term(X, 1, 0), kPts) < 1e-15);
}

TEST_CASE("commutators") {
  const DiffOp c = commutator(DiffOp::partial(1, 0), DiffOp::multiplication(X));
  CHECK(distance(c, DiffOp::identity(), kPts) == 0);
  CHECK(max_coeff(commutator(DiffOp::partial(1, 0), DiffOp::partial(0, 1)), kPts, {}) == 0);
  const DiffOp a = DiffOp::term(X, 1, 0), b = DiffOp::term(Y * Y, 0, 2);
  CHECK(distance(anticommutator(a, b), a * b + b * a, kPts) == 0);
}

TEST_CASE("catalog integrals commute with H") {
  for (std::uint64_t seed : {3u, 11u}) {
    const ParamEnv env = random_params(seed, 1.0);
    const SuperSystem s1 = build_class(ClassTag::I1, env);
    const auto pts = s1.domain.sample(seed, 25);
    CHECK(commutator_residual(s1.H(), s1.A(), pts, env) < 1e-8);
    const SuperSystem s2 = build_class(ClassTag::II2, env);
    const auto pts2 = s2.domain.sample(seed, 25);
    CHECK(commutator_residual(s2.H(), s2.B, pts2, env) < 1e-8);
  }
}

TEST_CASE("max_coeff") {
  CHECK(max_coeff(DiffOp(), kPts, {}) == 0);
  const ParamEnv env = random_params(5, 1.0);
  const SuperSystem s = build_class(ClassTag::II1, env);
  CHECK(max_coeff(s.H() - s.H(), kPts, env) < 1e-13);
  const MaxCoeffReport r = max_coeff_skipping(DiffOp::multiplication(1.0 / (X - 1.1)), kPts, {});
  CHECK(r.skipped.size() == 1);
  CHECK(r.value > 0);
}

TEST_CASE("applying operators") {
  const ParamEnv env;
  const WaveFunction psi = as_wavefunction(X * Y, env);
  CHECK(op_apply(DiffOp::identity(), psi, {2, 3}, env) == doctest::Approx(6));
  CHECK(op_apply(DiffOp::partial(1, 0), psi, {2, 3}, env) == doctest::Approx(3));
  const WaveFunction w = as_wavefunction(sin(X) * exp(2.0 * Y), env);
  const DiffOp lap = DiffOp::partial(2, 0) + DiffOp::partial(0, 2);
  const Point p{0.3, -0.4};
  CHECK(op_apply(lap, w, p, env) == doctest::Approx(3 * std::sin(0.3) * std::exp(-0.8)));
}

TEST_CASE("polynomials in an operator") {
  const DiffOp H = DiffOp::term(X, 2, 0) + DiffOp::multiplication(Y);
  const Real five[] = {5};
  CHECK(distance(poly_in_H(five, H), 5.0 * DiffOp::identity(), kPts) == 0);
  const Real lin[] = {0, 1};
  CHECK(distance(poly_in_H(lin, H), H, kPts) == 0);
  const Real quad[] = {1, 0, 2};
  CHECK(distance(poly_in_H(quad, H), DiffOp::identity() + 2.0 * (H * H), kPts) < 1e-14);
}

TEST_CASE("pullback through coordinate maps") {
  const DiffOp dX = DiffOp::partial(1, 0);
  const DiffOp a = pullback(dX, 2.0 * sqrt(X), Y);
  CHECK(distance(a, DiffOp::term(sqrt(X), 1, 0), kPts) < 1e-15);
  CHECK(distance(pullback(dX, X, Y), dX, kPts) == 0);
  // d_XX with X = ln xi gives xi^2 d_xixi + xi d_xi
  const DiffOp b = pullback(DiffOp::partial(2, 0), log(X), Y);
  CHECK(distance(b, DiffOp::term(X * X, 2, 0) + DiffOp::term(X, 1, 0), kPts) < 1e-14);
  // coefficients move with the map: exp(X) d_Y at X = ln xi is xi d_eta / 1
  const DiffOp c = pullback(DiffOp::term(exp(X), 0, 1), log(X), 3.0 * Y);
  CHECK(distance(c, DiffOp::term(X / 3.0, 0, 1), kPts) < 1e-15);
  CHECK_THROWS_AS((void)pullback(dX, X * Y, Y), std::invalid_argument);
}
