#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "qsint/algebra.hpp"

using namespace qsint;

namespace {

const ScalarField X = ScalarField::xi();
const ScalarField Y = ScalarField::eta();

ScalarField random_cubic(SeededUniform& rng, const ScalarField& var) {
  const Real c[] = {rng.next(2, 3), rng.next(-0.3, 0.3), rng.next(-0.3, 0.3), rng.next(-0.3, 0.3)};
  return polynomial(c, var);
}

std::vector<Point> box_points(std::uint64_t seed, int n) {
  SafeDomain d;
  return d.sample(seed, n);
}

}  // namespace

TEST_CASE("catalog generating functions") {
  ParamEnv env;
  env.lambda = 1;
  CHECK(value(catalog_fields(ClassTag::I1).F, {2, 0}, env) == doctest::Approx(16));

  ParamEnv e3;
  e3.kappa = 1;
  CHECK(value(catalog_fields(ClassTag::II3).F, {0, 2}, e3) == doctest::Approx(0.125));

  ParamEnv et;
  et.kappa = 2;
  et.lambda = 1;
  CHECK(value(catalog_fields(ClassTag::I3).Ft, {std::numbers::pi / 4, 0}, et) == doctest::Approx(1.5));
}

TEST_CASE("class names and table rows") {
  for (ClassTag t : kAllClasses) CHECK(parse_class(to_string(t)) == t);
  CHECK_FALSE(parse_class("III").has_value());
  CHECK(table_row(ClassTag::I1).a == 6);
  CHECK(table_row(ClassTag::I2).alpha == -8);
  CHECK(table_row(ClassTag::I3).alpha == 32);
  CHECK(table_row(ClassTag::I3).gamma == -8);
  CHECK(table_row(ClassTag::II2).a == 6);
  CHECK(table_row(ClassTag::II3).alpha == -8);
  CHECK(table_row(ClassTag::II1).alpha == 0);
}

TEST_CASE("flat Liouville system") {
  ParamEnv env;
  env.hbar = 0.7;
  const IntegrableSystem s = build_liouville(0.5, 0.5, 0.0, 0.0);
  const auto pts = box_points(1, 8);
  const Real h2 = env.hbar * env.hbar;
  CHECK(max_coeff(s.H - DiffOp::term(-h2, 1, 1), pts, env) < 1e-15);
  CHECK(max_coeff(s.A - DiffOp::term(-h2, 2, 0) - DiffOp::term(-h2, 0, 2), pts, env) < 1e-15);
  CHECK(max_coeff(commutator(s.H, s.A), pts, env) == 0);
}

TEST_CASE("random cubic Liouville systems are integrable") {
  SeededUniform rng(77);
  const ParamEnv env;
  for (int draw = 0; draw < 5; ++draw) {
    const IntegrableSystem s = build_liouville(random_cubic(rng, X), random_cubic(rng, X),
                                               random_cubic(rng, X), random_cubic(rng, X));
    const auto pts = box_points(100 + draw, 25);
    CHECK(commutator_residual(s.H, s.A, pts, env) < 1e-8);
  }
}

TEST_CASE("free Lie system") {
  const ParamEnv env;
  const IntegrableSystem s = build_lie(0.0, 1.0, 0.0, 0.0, ScalarField(0.0), ScalarField(0.0));
  const auto pts = box_points(2, 8);
  CHECK(max_coeff(s.H - DiffOp::term(-1.0, 1, 1), pts, env) < 1e-15);
  CHECK(max_coeff(s.A - DiffOp::term(-1.0, 2, 0), pts, env) < 1e-15);
  CHECK(max_coeff(commutator(s.H, s.A), pts, env) == 0);
}

TEST_CASE("linear Lie data with quadrature-backed integrals") {
  const ParamEnv env = random_params(9, 1.0);
  auto P = [](Param p) { return ScalarField::param(p); };
  const IntegrableSystem s = build_lie(P(Param::Kappa) * Y + P(Param::Lambda), P(Param::Mu) * Y + P(Param::Nu),
                                       P(Param::K) * Y + P(Param::L), P(Param::M) * Y + P(Param::N));
  const auto pts = box_points(3, 25);
  CHECK(commutator_residual(s.H, s.A, pts, env) < 1e-8);
}

TEST_CASE("random smooth Lie systems are integrable") {
  SeededUniform rng(31);
  const ParamEnv env;
  for (int draw = 0; draw < 3; ++draw) {
    const ScalarField F = random_cubic(rng, Y) + 0.2 * sin(Y);
    const ScalarField f = random_cubic(rng, Y) * exp(-0.5 * Y);
    const IntegrableSystem s = build_lie(F, random_cubic(rng, Y), f, random_cubic(rng, Y));
    const auto pts = box_points(200 + draw, 25);
    CHECK(commutator_residual(s.H, s.A, pts, env) < 1e-7);
  }
  CHECK_THROWS_AS((void)build_lie(X, 1.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("parameter specialization gives a flat metric") {
  ParamEnv env;
  env.nu = 2;
  const SuperSystem s = build_class(ClassTag::I1, env);
  const auto pts = s.domain.sample(4, 10);
  for (const Point& p : pts) CHECK(value(s.base.metric, p, env) == doctest::Approx(2));
  CHECK(max_coeff(s.H() - DiffOp::term(-0.5, 1, 1), pts, env) < 1e-15);
}

TEST_CASE("every class commutes on its safe domain") {
  for (ClassTag t : kAllClasses) {
    CAPTURE(to_string(t));
    for (std::uint64_t seed : {1u, 2u}) {
      const ParamEnv env = random_params(seed, seed == 1 ? 1.0 : 0.5);
      const SuperSystem s = build_class(t, env);
      const auto pts = s.domain.sample(seed, 25);
      for (const Point& p : pts) CHECK(s.domain.contains(p));
      CHECK(commutator_residual(s.H(), s.A(), pts, env) < 1e-8);
      CHECK(commutator_residual(s.H(), s.B, pts, env) < 1e-8);
    }
  }
}

TEST_CASE("special II3 parameter choice") {
  ParamEnv env;
  env.lambda = env.kappa = 1;
  const SuperSystem s = build_class(ClassTag::II3, env);
  const auto pts = s.domain.sample(5, 25);
  CHECK(commutator_residual(s.H(), s.A(), pts, env) < 1e-8);
  CHECK(commutator_residual(s.H(), s.B, pts, env) < 1e-8);
}

TEST_CASE("second integral agrees in both frames") {
  // B applied to phi(X(xi), Y(eta)) equals the (X, Y) operator applied to phi
  const ScalarField phi = X * X * Y + 0.3 * pow(Y, 3) - X + 2.0;
  for (ClassTag t : kAllClasses) {
    CAPTURE(to_string(t));
    const ParamEnv env = random_params(12, 1.0);
    const SuperSystem s = build_class(t, env);
    const DiffOp bxy = second_integral_xy(s.fields);
    const WaveFunction in_xieta = as_wavefunction(phi.at(s.fields.xmap, s.fields.ymap), env);
    const WaveFunction in_xy = as_wavefunction(phi, env);
    for (const Point& p : s.domain.sample(6, 6)) {
      const Point q{value(s.fields.xmap, p, env), value(s.fields.ymap, p, env)};
      const Real a = op_apply(s.B, in_xieta, p, env);
      const Real b = op_apply(bxy, in_xy, q, env);
      CHECK(a == doctest::Approx(b).epsilon(1e-11));
    }
  }
}

TEST_CASE("structure equations") {
  for (ClassTag t : kAllClasses) {
    CAPTURE(to_string(t));
    const ParamEnv env = random_params(8, 1.0);
    const SuperSystem s = build_class(t, env);
    const auto pts = s.domain.sample(8, 25);
    const StructureResiduals r = check_structure_equations(s, pts);
    CHECK(r.metric_residual < 1e-9);
    CHECK(r.potential_residual < 1e-9);
    CHECK(r.diff_beta < 1e-9);
    CHECK(r.diff_q < 1e-9);
  }
}

TEST_CASE("structure equations with zero potential and a perturbed potential") {
  ParamEnv env = random_params(4, 1.0);
  env.k = env.l = env.m = env.n = 0;
  const SuperSystem s = build_class(ClassTag::II1, env);
  CHECK(check_structure_equations(s, s.domain.sample(4, 25)).potential_residual == 0);

  const ParamEnv e2 = random_params(4, 1.0);
  const SuperSystem bad = build_class(ClassTag::II2, e2, ClassOptions{0.1});
  CHECK(check_structure_equations(bad, bad.domain.sample(4, 25)).potential_residual > 1e-3);
}

TEST_CASE("top-symbol relation") {
  for (ClassTag t : kAllClasses) {
    CAPTURE(to_string(t));
    for (Real hbar : {0.5, 1.0, 2.0}) {
      const auto pts = safe_domain(t).sample(9, 25);
      CHECK(top_symbol_residual(t, hbar, pts, +1) < 1e-10);
    }
  }
  // the printed sign of the alpha term only matters where alpha != 0
  const auto pts = safe_domain(ClassTag::I2).sample(9, 25);
  CHECK(top_symbol_residual(ClassTag::I2, 1.0, pts, -1) > 1e-3);
  CHECK(top_symbol_residual(ClassTag::I1, 1.0, pts, -1) < 1e-10);
}

TEST_CASE("seeded sampling is reproducible") {
  const SafeDomain d = safe_domain(ClassTag::I2);
  const auto a = d.sample(42, 30), b = d.sample(42, 30), c = d.sample(43, 30);
  CHECK(a == b);
  CHECK(a != c);
  for (const Point& p : a) {
    CHECK(std::abs(p.xi - p.eta) >= 0.2);
    CHECK(p.xi + p.eta >= 0.5);
  }
  SeededUniform r1(5), r2(5);
  for (int i = 0; i < 10; ++i) CHECK(r1.next(0, 1) == r2.next(0, 1));
}
