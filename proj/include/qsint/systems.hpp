#pragma once

// Integrable and superintegrable systems with quadratic integrals.
//
// Every operator is written in the (xi, eta) frame where the Hamiltonian is
//   H = -hbar^2 / g(xi, eta) d_xi d_eta + V(xi, eta).

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsint/diffop.hpp"

namespace qsint {

enum class ClassTag { I1, I2, I3, II1, II2, II3 };

inline constexpr std::array<ClassTag, 6> kAllClasses = {ClassTag::I1,  ClassTag::I2,
                                                        ClassTag::I3,  ClassTag::II1,
                                                        ClassTag::II2, ClassTag::II3};

const char* to_string(ClassTag tag);
std::optional<ClassTag> parse_class(std::string_view name);
bool is_liouville_class(ClassTag tag);

/// One row of the classification table: (alpha, gamma, a) as multiples of
/// hbar^2 together with A(xi), B(eta) of the second integral.
struct TableRow {
  Real alpha = 0;
  Real gamma = 0;
  Real a = 0;
  std::string a_fn;
  std::string b_fn;
};
TableRow table_row(ClassTag tag);

/// Catalog functions of one subclass. For class I the metric/potential
/// functions are univariate fields written in the variable xi (used as u or
/// v); for class II they are fields of eta. The tilde functions are always
/// univariate in xi.
struct CatalogFields {
  ScalarField F, G, f, g;
  ScalarField Ft, Gt, ft, gt;
  ScalarField xmap, ymap;  // X(xi), Y(eta)
  ScalarField int_F, int_f;  // class II: closed-form antiderivatives (natural primitives)
  ScalarField a_fn, b_fn;  // A(xi), B(eta) of the second integral
};

CatalogFields catalog_fields(ClassTag tag);

/// Per-class region free of coefficient singularities.
struct SafeDomain {
  Real xi_lo = 1, xi_hi = 2, eta_lo = 1, eta_hi = 2;
  Real min_abs_diff = 0;  // |xi - eta| >= min_abs_diff
  Real min_sum = -1e300;  // xi + eta >= min_sum
  std::string excluded;

  bool contains(Point p) const;
  /// `count` seeded points, uniformly drawn and filtered by the guards.
  std::vector<Point> sample(std::uint64_t seed, int count) const;
};

SafeDomain safe_domain(ClassTag tag);

/// Deterministic uniform draws in [lo, hi) from a seed (portable across
/// standard libraries).
class SeededUniform {
 public:
  explicit SeededUniform(std::uint64_t seed);
  Real next(Real lo, Real hi);

 private:
  std::uint64_t state_;
};

/// All eight potential/metric parameters drawn from [1/2, 2].
ParamEnv random_params(std::uint64_t seed, Real hbar);

enum class SystemKind { Liouville, Lie };

struct IntegrableSystem {
  SystemKind kind = SystemKind::Liouville;
  DiffOp H, A;
  ScalarField metric, potential, beta, q;
  // Generating functions: univariate (Liouville) or fields of eta (Lie).
  ScalarField F, G, f, g;
  ScalarField int_F, int_f;  // Lie only
};

class DegenerateMetric : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Optional construction-time probe of the metric.
struct MetricProbe {
  SafeDomain domain;
  ParamEnv env;
  int samples = 25;
  std::uint64_t seed = 0;
};

IntegrableSystem build_liouville(const ScalarField& F, const ScalarField& G, const ScalarField& f,
                                 const ScalarField& g,
                                 const std::optional<MetricProbe>& probe = std::nullopt);

/// Lie constructor. When the antiderivatives are not supplied they are
/// quadrature-backed fields with lower limit eta0 (a parameter).
IntegrableSystem build_lie(const ScalarField& F, const ScalarField& G, const ScalarField& f,
                           const ScalarField& g,
                           const std::optional<ScalarField>& int_F = std::nullopt,
                           const std::optional<ScalarField>& int_f = std::nullopt,
                           const std::optional<MetricProbe>& probe = std::nullopt,
                           Real quad_tol = 1e-12);

/// -hbar^2 d_XX - hbar^2 d_YY + 2 hbar^2 (F - G)/(F + G) d_XY + 4 (f G - g F)/(F + G)
/// with the four fields already evaluated at X + Y (F, f) and X - Y (G, g).
DiffOp liouville_integral(const ScalarField& F_u, const ScalarField& G_v, const ScalarField& f_u,
                          const ScalarField& g_v);

struct ClassOptions {
  /// Adds perturb_f * (variable)^3 to f. Used as a negative control.
  Real perturb_f = 0;
};

struct SuperSystem {
  ClassTag tag = ClassTag::I1;
  ParamEnv env;
  IntegrableSystem base;  // H and the first integral A
  DiffOp B;
  CatalogFields fields;
  SafeDomain domain;

  const DiffOp& H() const { return base.H; }
  const DiffOp& A() const { return base.A; }
};

SuperSystem build_class(ClassTag tag, const ParamEnv& env, const ClassOptions& options = {});

/// B assembled in (X, Y) from the tilde functions, before the pullback.
DiffOp second_integral_xy(const CatalogFields& fields);

struct StructureResiduals {
  Real metric_residual = 0;     // metric compatibility equation
  Real potential_residual = 0;  // potential compatibility equation
  Real diff_beta = 0;           // class-specialized metric equation on F, G
  Real diff_q = 0;              // class-specialized potential equation on f, g
};

/// Residuals of the two compatibility PDEs for the second integral's A(xi),
/// B(eta), the metric and the potential, relative to the largest term.
StructureResiduals check_structure_equations(const SuperSystem& sys, std::span<const Point> points);

/// 6 hbar^2 A'(xi)^2 - a + 3 gamma A^2 + sign * 3 alpha A at the points, with
/// the table values of (alpha, gamma, a). sign = -1 is the printed form,
/// sign = +1 the form consistent with the table.
Real top_symbol_residual(ClassTag tag, Real hbar, std::span<const Point> points, Real alpha_sign);

}  // namespace qsint
