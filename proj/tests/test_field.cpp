#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qsint/field.hpp"

using namespace qsint;

namespace {

const ScalarField X = ScalarField::xi();
const ScalarField Y = ScalarField::eta();
ScalarField P(Param p) { return ScalarField::param(p); }

}  // namespace

TEST_CASE("parameter fields") {
  ParamEnv env;
  env.nu = 3;
  const Jet2 j = eval(P(Param::Nu) / 2.0, {0.7, -1.2}, 2, env);
  CHECK(j.value() == doctest::Approx(1.5));
  for (std::size_t k = 1; k < j.size(); ++k) CHECK(j.raw()[k] == 0);
}

TEST_CASE("power rule on a pole term") {
  ParamEnv env;
  env.mu = 1;
  const Jet2 j = eval(P(Param::Mu) / pow(X, 2), {2, 0}, 1, env);
  CHECK(j.value() == doctest::Approx(0.25));
  CHECK(j.partial(1, 0) == doctest::Approx(-0.25));
}

TEST_CASE("exponential shape against pointwise evaluation") {
  ParamEnv env;
  env.kappa = 1;
  const ScalarField e2 = exp(2.0 * X);
  const ScalarField f = P(Param::Kappa) * e2 / pow(e2 - 1.0, 2);
  const double u = 1;
  const double direct = std::exp(2 * u) / std::pow(std::exp(2 * u) - 1, 2);
  CHECK(std::abs(value(f, {u, 0}, env) - direct) < 1e-14);
}

TEST_CASE("antiderivative of a linear integrand") {
  ParamEnv env;
  env.kappa = 2;
  env.lambda = 1;
  env.eta0 = 0;
  const ScalarField F = P(Param::Kappa) * Y + P(Param::Lambda);
  const ScalarField I = ScalarField::antiderivative(F, P(Param::Eta0));
  const Jet2 j = eval(I, {0.5, 3}, 2, env);
  CHECK(j.value() == doctest::Approx(12).epsilon(1e-12));
  CHECK(j.partial(0, 1) == doctest::Approx(7));
  CHECK(j.partial(0, 2) == doctest::Approx(2));
  CHECK(j.partial(1, 0) == 0);

  const Jet2 at_lower = eval(I, {0.5, 0}, 1, env);
  CHECK(at_lower.value() == 0);
  CHECK(at_lower.partial(0, 1) == doctest::Approx(1));
}

TEST_CASE("antiderivative of an inverse square root") {
  ParamEnv env;
  env.kappa = 1;
  env.lambda = 0;
  env.eta0 = 1;
  const ScalarField F = P(Param::Kappa) / sqrt(Y) + P(Param::Lambda);
  const ScalarField I = ScalarField::antiderivative(F, P(Param::Eta0));
  CHECK(value(I, {0, 4}, env) == doctest::Approx(2).epsilon(1e-12));
}

TEST_CASE("antiderivative of an oscillating integrand with cancellation") {
  // int_0^{2 pi} sin(3 t) dt = 0 and int_0^x cos t dt = sin x
  ParamEnv env;
  const ScalarField s = ScalarField::antiderivative(sin(3.0 * Y), 0.0);
  CHECK(std::abs(value(s, {0, 2 * std::numbers::pi}, env)) < 1e-12);
  const ScalarField c = ScalarField::antiderivative(cos(Y), 0.0);
  CHECK(value(c, {0, 1.3}, env) == doctest::Approx(std::sin(1.3)).epsilon(1e-13));
}

TEST_CASE("composition and lazy derivatives") {
  ParamEnv env;
  // g(u) = u^3 at u = xi + 2 eta
  const ScalarField g = pow(X, 3);
  const ScalarField h = g.at(X + 2.0 * Y);
  const Point p{0.4, 0.3};
  const double u = p.xi + 2 * p.eta;
  const Jet2 j = eval(h, p, 3, env);
  CHECK(j.value() == doctest::Approx(u * u * u));
  CHECK(j.partial(1, 0) == doctest::Approx(3 * u * u));
  CHECK(j.partial(0, 1) == doctest::Approx(6 * u * u));
  CHECK(j.partial(1, 2) == doctest::Approx(24));

  const ScalarField d = h.derivative(0, 2);
  CHECK(value(d, p, env) == doctest::Approx(24 * u));
}

TEST_CASE("composition keeps the precision of the inner value") {
  // atan(exp(xi)) does not round-trip through a double exactly; the outer
  // expansion must absorb the offset
  ParamEnv env;
  const ScalarField inner = atan(exp(X));
  const ScalarField outer = pow(tan(X), 2).at(inner);
  const Point p{0.83, 0};
  const double t = std::exp(p.xi);
  const Jet2 j = eval(outer, p, 4, env);
  CHECK(j.value() == doctest::Approx(t * t).epsilon(1e-15));
  // d/dxi e^{2 xi} = 2 e^{2 xi}, etc.
  for (int k = 1; k <= 4; ++k) CHECK(j.partial(k, 0) == doctest::Approx(std::pow(2.0, k) * t * t).epsilon(1e-13));
}

TEST_CASE("domain errors surface from evaluation") {
  ParamEnv env;
  CHECK_THROWS_AS((void)value(log(X), {-1, 0}, env), DomainError);
  CHECK_THROWS_AS((void)value(1.0 / (X - Y), {1, 1}, env), DomainError);
}

TEST_CASE("polynomials and literals") {
  ParamEnv env;
  const Real c[] = {1, -2, 0, 4};
  const ScalarField q = polynomial(c, Y);
  CHECK(value(q, {0, 0.5}, env) == doctest::Approx(1 - 1 + 0.5));
  CHECK(ScalarField(3.5).literal() == 3.5);
  CHECK(ScalarField().is_zero());
  CHECK(q.depends_on_eta());
  CHECK_FALSE(q.depends_on_xi());
}

TEST_CASE("hbar must be positive") {
  ParamEnv env;
  env.hbar = 0;
  CHECK_THROWS_AS(env.validate(), std::invalid_argument);
  CHECK(parse_param("kappa") == Param::Kappa);
  CHECK_FALSE(parse_param("rho").has_value());
}
