#include <doctest.h>

#include <cmath>
#include <vector>

#include "qsint/algebra.hpp"

using namespace qsint;

namespace {

const ScalarField X = ScalarField::xi();
const ScalarField Y = ScalarField::eta();

// op applied to a field through lazy derivatives, bypassing composition
ScalarField apply_field(const DiffOp& op, const ScalarField& psi) {
  ScalarField out(0.0);
  for (const auto& [idx, c] : op.terms()) out = out + c * psi.derivative(idx.i, idx.j);
  return out;
}

PolyInH lin(Real s, Real c) { return PolyInH::linear(s, c); }

Real poly_distance(const PolyInH& a, const PolyInH& b) {
  Real m = 0;
  for (int k = 0; k <= std::max(a.degree(), b.degree()); ++k)
    m = std::max(m, std::abs(a.coeff(k) - b.coeff(k)) / std::max<Real>(1, std::abs(b.coeff(k))));
  return m;
}

}  // namespace

TEST_CASE("polynomials in H") {
  const PolyInH p = lin(2, -1) * lin(1, 3);  // 2H^2 + 5H - 3
  CHECK(p.degree() == 2);
  CHECK(p.coeff(0) == -3);
  CHECK(p.coeff(1) == 5);
  CHECK(p.coeff(2) == 2);
  CHECK(pow(lin(1, 1), 3).coeffs() == std::vector<Real>{1, 3, 3, 1});
  CHECK((p - p).degree() == -1);
  CHECK(p.padded(4) == std::vector<Real>{-3, 5, 2, 0});
  const AlgebraConstants c = unflatten(flatten(corrected_constants(ClassTag::I3, random_params(1, 1.0))));
  CHECK(flatten(c) == flatten(corrected_constants(ClassTag::I3, random_params(1, 1.0))));
  CHECK(constant_names().size() == 16);
}

TEST_CASE("printed constants") {
  ParamEnv env;
  env.hbar = 1;
  env.kappa = 2;
  env.k = 3;
  const AlgebraConstants i1 = printed_constants(ClassTag::I1, env);
  CHECK(i1.delta.padded(2) == std::vector<Real>{48, -32});
  CHECK(i1.a == 6);

  const AlgebraConstants ii1 = printed_constants(ClassTag::II1, random_params(3, 1.3));
  CHECK(ii1.epsilon.padded(2) == std::vector<Real>{0, 0});

  ParamEnv e2;
  e2.lambda = 1;
  const AlgebraConstants i2 = printed_constants(ClassTag::I2, e2);
  CHECK(i2.epsilon.padded(2) == std::vector<Real>{0, -256});
  CHECK(i2.d.padded(1) == std::vector<Real>{16});

  const ParamEnv e3 = random_params(6, 0.5);
  const AlgebraConstants ii3 = printed_constants(ClassTag::II3, e3);
  const Real h2 = 0.25;
  CHECK(ii3.alpha == doctest::Approx(-8 * h2));
  CHECK(ii3.d.padded(1)[0] == doctest::Approx(16 * h2 * h2));
  const PolyInH zeta = -32 * h2 * lin(e3.kappa, -e3.k) * lin(e3.lambda, -e3.l);
  CHECK(poly_distance(ii3.zeta, zeta) < 1e-14);
  const PolyInH z = -32 * h2 * lin(e3.mu, -e3.m) * lin(e3.nu, -e3.n);
  CHECK(poly_distance(ii3.z, z) < 1e-14);

  CHECK(known_typos().size() == 5);
}

TEST_CASE("C against a direct application") {
  const ScalarField psi = exp(0.3 * X) * Y * Y + X * X * X * Y;
  for (ClassTag t : {ClassTag::I1, ClassTag::II1}) {
    CAPTURE(to_string(t));
    ParamEnv env = random_params(2, 1.0);
    if (t == ClassTag::II1) {
      env.kappa = env.mu = 0;
      env.lambda = env.nu = 1;
    }
    const SuperSystem s = build_class(t, env);
    const DiffOp C = compute_C(s.A(), s.B);
    CHECK(C.order() == 3);
    const ScalarField direct = apply_field(s.A(), apply_field(s.B, psi)) - apply_field(s.B, apply_field(s.A(), psi));
    for (const Point& p : s.domain.sample(2, 5))
      CHECK(op_apply(C, as_wavefunction(psi, env), p, env) == doctest::Approx(value(direct, p, env)).epsilon(1e-10));
    const auto pts = s.domain.sample(3, 25);
    CHECK(commutator_residual(s.H(), C, pts, env) < 1e-8);
  }
  const SuperSystem s = build_class(ClassTag::I2, random_params(2, 1.0));
  const auto pts = s.domain.sample(4, 10);
  CHECK(max_coeff(compute_C(s.A(), s.A()), pts, s.env) == 0);
}

TEST_CASE("relations with printed and corrected constants") {
  {
    const ParamEnv env = random_params(13, 1.0);
    const SuperSystem s = build_class(ClassTag::I1, env);
    AlgebraOperators ops(s.H(), s.A(), s.B);
    const auto r = relation_residuals(ops, printed_constants(ClassTag::I1, env), s.domain.sample(13, 25), env);
    CHECK(r.r1 < 1e-7);
    CHECK(r.r2 < 1e-7);
  }
  {
    // the printed I1 d lacks its hbar^2 and only agrees at hbar = 1
    const ParamEnv env = random_params(13, 2.0);
    const SuperSystem s = build_class(ClassTag::I1, env);
    AlgebraOperators ops(s.H(), s.A(), s.B);
    const auto pts = s.domain.sample(13, 25);
    CHECK(relation_residuals(ops, printed_constants(ClassTag::I1, env), pts, env).r2 > 1e-3);
    CHECK(relation_residuals(ops, corrected_constants(ClassTag::I1, env), pts, env).r2 < 1e-7);
  }
  {
    const ParamEnv env = random_params(14, 0.5);
    const SuperSystem s = build_class(ClassTag::II3, env);
    AlgebraOperators ops(s.H(), s.A(), s.B);
    const auto r = relation_residuals(ops, printed_constants(ClassTag::II3, env), s.domain.sample(14, 25), env);
    CHECK(r.r1 < 1e-7);
    CHECK(r.r2 < 1e-7);
  }
  {
    const SuperSystem s = build_class(ClassTag::II1, random_params(1, 1.0));
    AlgebraOperators ops(s.H(), s.A(), s.A());
    const auto r = relation_residuals(ops, AlgebraConstants{}, s.domain.sample(1, 10), s.env);
    CHECK(r.r1 == 0);
    CHECK(r.r2 == 0);
  }
}

TEST_CASE("fitted constants") {
  {
    const ParamEnv env = random_params(21, 1.0);
    const SuperSystem s = build_class(ClassTag::I1, env);
    AlgebraOperators ops(s.H(), s.A(), s.B);
    const FitResult f = fit_constants(ops, s.domain.sample(21, 25), env);
    CHECK(std::abs(f.consts.a - 6) < 1e-8);
    CHECK(f.residual < 1e-8);
    CHECK(f.condition > 1);
    CHECK(f.singular_values.size() == 16);
  }
  {
    const ParamEnv env = random_params(22, 0.5);
    const Real h2 = 0.25;
    const SuperSystem s = build_class(ClassTag::II2, env);
    AlgebraOperators ops(s.H(), s.A(), s.B);
    const FitResult f = fit_constants(ops, s.domain.sample(22, 25), env);
    CHECK(std::abs(f.consts.a - 6 * h2) < 1e-7);
    CHECK(std::abs(f.consts.d.coeff(1) + 8 * h2 * env.nu) < 1e-7);
    CHECK(std::abs(f.consts.d.coeff(0) - 8 * h2 * env.n) < 1e-7);
  }
  {
    const SuperSystem s = build_class(ClassTag::I2, random_params(23, 1.0));
    AlgebraOperators ops(s.H(), s.A(), s.A());
    CHECK_THROWS_AS((void)fit_constants(ops, s.domain.sample(23, 25), s.env), RankDeficient);
  }
}

TEST_CASE("Casimir of the algebra") {
  {
    const SuperSystem s = build_class(ClassTag::II1, random_params(1, 1.0));
    AlgebraOperators ops(s.H(), s.A(), s.A());
    CHECK(max_coeff(casimir_operator(AlgebraConstants{}, ops), s.domain.sample(1, 10), s.env) == 0);
  }
  {
    const ParamEnv env = random_params(31, 1.0);
    const SuperSystem s = build_class(ClassTag::I1, env);
    AlgebraOperators ops(s.H(), s.A(), s.B);
    const auto pts = s.domain.sample(31, 25);
    const DiffOp K = casimir_operator(printed_constants(ClassTag::I1, env), ops);
    CHECK(commutator_residual(K, ops.A(), pts, env) < 1e-6);
    CHECK(commutator_residual(K, ops.B(), pts, env) < 1e-6);
  }
  {
    const ParamEnv env = random_params(32, 0.5);
    const Real h2 = 0.25;
    const SuperSystem s = build_class(ClassTag::II3, env);
    AlgebraOperators ops(s.H(), s.A(), s.B);
    const auto pts = s.domain.sample(32, 25);
    const DiffOp K = casimir_operator(printed_constants(ClassTag::II3, env), ops);
    const PolyInH closed = -64 * h2 * lin(env.lambda, -env.l) * pow(lin(env.mu, -env.m), 2) +
                           64 * h2 * lin(env.kappa, -env.k) * pow(lin(env.nu, -env.n), 2) +
                           64 * h2 * h2 * lin(-env.kappa, env.k) * lin(env.lambda, -env.l);
    const DiffOp Kc = poly_in_H(closed.coeffs(), ops.powers());
    CHECK(relative_max_coeff(K - Kc, pts, env, max_coeff(K, pts, env)) < 1e-6);
    CHECK(poly_distance(printed_casimir(ClassTag::II3, env), closed) < 1e-12);
    const CubicFit cf = fit_polynomial_in_H(K, ops, pts, env);
    CHECK(cf.residual < 1e-8);
    CHECK(poly_distance(cf.poly, closed) < 1e-6);
  }
}

TEST_CASE("grading of synthetic samples") {
  const std::vector<Real> hs{0.5, 1, 1.5, 2, 3};
  std::vector<Real> even, odd;
  for (Real h : hs) {
    even.push_back(3 + 2 * h * h - 7 * std::pow(h, 6));
    odd.push_back(3 + 2 * h * h + h * h * h);
  }
  const GradedEntry e = grade("x", hs, even);
  CHECK(e.c0 == doctest::Approx(3));
  CHECK(e.c2 == doctest::Approx(2));
  CHECK(std::abs(e.c4) < 1e-9);
  CHECK(e.c6 == doctest::Approx(-7));
  CHECK(e.odd_residual < 1e-12);
  CHECK(grade("y", hs, odd).odd_residual > 1e-6);
  CHECK_THROWS_AS((void)grade("z", std::span(hs).first(4), std::span(even).first(4)), std::invalid_argument);
}

TEST_CASE("grading identifies the pure quantum terms") {
  const std::vector<Real> hs{0.5, 0.75, 1, 1.5, 2};
  {
    const ParamEnv env = random_params(41, 1.0);
    const GradingReport g = hbar_grading(ClassTag::I1, env, hs, safe_domain(ClassTag::I1).sample(41, 25));
    const GradedEntry* a = g.find("a");
    REQUIRE(a != nullptr);
    for (std::size_t i = 0; i < hs.size(); ++i) CHECK(a->samples[i] / (hs[i] * hs[i]) == doctest::Approx(6));
    const GradedEntry* z1 = g.find("z1");
    REQUIRE(z1 != nullptr);
    CHECK(z1->c4 == doctest::Approx(-96 * env.lambda));
    for (const GradedEntry& e : g.entries) CHECK(e.odd_residual < 1e-9);
  }
  {
    const ParamEnv env = random_params(42, 1.0);
    const GradingReport g = hbar_grading(ClassTag::I2, env, hs, safe_domain(ClassTag::I2).sample(42, 25));
    CHECK(g.find("d0")->c4 == doctest::Approx(16));
    CHECK(std::abs(g.find("d0")->c2) < 1e-9);
  }
  {
    const ParamEnv env = random_params(43, 1.0);
    const GradingReport g = hbar_grading(ClassTag::I3, env, hs, safe_domain(ClassTag::I3).sample(43, 25));
    CHECK(g.find("delta0")->c4 == doctest::Approx(32));
    CHECK(g.find("epsilon0")->c4 == doctest::Approx(-16));
    CHECK(g.find("nonexistent") == nullptr);
  }
}
