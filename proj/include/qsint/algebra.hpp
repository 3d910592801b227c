#pragma once

// The quadratic associative algebra generated by two quadratic integrals:
//   [A, B] = C
//   [A, C] = alpha A^2 + beta B^2 + gamma {A,B} + delta A + epsilon B + zeta
//   [B, C] = a A^2 - gamma B^2 - alpha {A,B} + d A - delta B + z
// with delta, epsilon, d linear and zeta, z quadratic polynomials in H.

#include <string>
#include <vector>

#include "qsint/systems.hpp"

namespace qsint {

/// Polynomial in H with real coefficients, c[k] multiplies H^k.
class PolyInH {
 public:
  PolyInH() = default;
  PolyInH(Real c0) : c_{c0} {}  // NOLINT
  explicit PolyInH(std::vector<Real> coeffs);
  /// s * H + c0
  static PolyInH linear(Real s, Real c0) { return PolyInH({c0, s}); }

  int degree() const;  // -1 for the zero polynomial
  Real coeff(int k) const { return k < static_cast<int>(c_.size()) ? c_[k] : 0.0; }
  const std::vector<Real>& coeffs() const { return c_; }
  /// Coefficients padded/truncated to exactly n entries.
  std::vector<Real> padded(std::size_t n) const;

  PolyInH& operator+=(const PolyInH& o);
  PolyInH& operator-=(const PolyInH& o);
  friend PolyInH operator+(PolyInH a, const PolyInH& b) { return a += b; }
  friend PolyInH operator-(PolyInH a, const PolyInH& b) { return a -= b; }
  friend PolyInH operator-(const PolyInH& a) { return PolyInH() - a; }
  friend PolyInH operator*(const PolyInH& a, const PolyInH& b);
  friend PolyInH operator*(Real s, const PolyInH& a) { return PolyInH(s) * a; }
  friend PolyInH pow(const PolyInH& a, int n);

  std::string to_string() const;

 private:
  std::vector<Real> c_;
};

struct AlgebraConstants {
  Real alpha = 0, beta = 0, gamma = 0, a = 0;
  PolyInH delta, epsilon, zeta, d, z;
};

/// Names of the sixteen scalar unknowns in fit order.
const std::vector<std::string>& constant_names();
std::vector<Real> flatten(const AlgebraConstants& c);
AlgebraConstants unflatten(std::span<const Real> v);

/// The constants exactly as printed for each class, typos included.
AlgebraConstants printed_constants(ClassTag tag, const ParamEnv& env);
/// The printed closed form of the Casimir, a cubic in H.
PolyInH printed_casimir(ClassTag tag, const ParamEnv& env);
/// The closed form with the known misprints corrected.
PolyInH corrected_casimir(ClassTag tag, const ParamEnv& env);

struct TypoCorrection {
  ClassTag tag;
  std::string constant;
  std::string printed;
  std::string corrected;
};
/// Known misprints with their corrected reading.
const std::vector<TypoCorrection>& known_typos();
/// printed_constants with the known misprints replaced by their corrections.
AlgebraConstants corrected_constants(ClassTag tag, const ParamEnv& env);

/// C = [A, B].
DiffOp compute_C(const DiffOp& A, const DiffOp& B);

/// Shared operator cache for one (H, A, B) triple.
class AlgebraOperators {
 public:
  AlgebraOperators(DiffOp H, DiffOp A, DiffOp B);
  const DiffOp& H() const { return H_; }
  const DiffOp& A() const { return A_; }
  const DiffOp& B() const { return B_; }
  const DiffOp& C();
  const DiffOp& AC();  // [A, C]
  const DiffOp& BC();  // [B, C]
  const DiffOp& A2();
  const DiffOp& B2();
  const DiffOp& AB_anti();
  const DiffOp& HA();
  const DiffOp& HB();
  OperatorPowers& powers() { return powers_; }

 private:
  DiffOp H_, A_, B_;
  std::optional<DiffOp> C_, AC_, BC_, A2_, B2_, ABa_, HA_, HB_;
  OperatorPowers powers_;
};

struct RelationResiduals {
  Real r1 = 0;
  Real r2 = 0;
};

/// Sampled max coefficient of the two relation defects, each relative to
/// max(1, largest sampled coefficient of the terms involved).
RelationResiduals relation_residuals(AlgebraOperators& ops, const AlgebraConstants& consts,
                                     std::span<const Point> points, const ParamEnv& env);

class RankDeficient : public std::runtime_error {
 public:
  RankDeficient(const std::string& what, int deficiency)
      : std::runtime_error(what), deficiency_(deficiency) {}
  int deficiency() const { return deficiency_; }

 private:
  int deficiency_;
};

struct FitResult {
  AlgebraConstants consts;
  Real residual = 0;   // max row defect relative to max(1, |rhs|)
  Real condition = 0;  // of the column-scaled design matrix
  int rows = 0;
  std::vector<Real> singular_values;
};

/// Least-squares fit of all sixteen constants from sampled coefficients of
/// [A,C] and [B,C] against the basis A^2, B^2, {A,B}, HA, A, HB, B, H^2, H, 1.
/// Throws RankDeficient when the design matrix loses rank.
FitResult fit_constants(AlgebraOperators& ops, std::span<const Point> points, const ParamEnv& env);

/// The Casimir of the algebra with every polynomial in H realized as an
/// operator factor on the left.
DiffOp casimir_operator(const AlgebraConstants& c, AlgebraOperators& ops);

/// Least-squares coefficients of K as a cubic in H (K ~ k0 + k1 H + k2 H^2 + k3 H^3).
struct CubicFit {
  PolyInH poly;
  Real residual = 0;
};
CubicFit fit_polynomial_in_H(const DiffOp& K, AlgebraOperators& ops, std::span<const Point> points,
                             const ParamEnv& env);

/// Max sampled coefficient of P relative to max(1, max sampled coefficient of `scale`).
Real relative_max_coeff(const DiffOp& P, std::span<const Point> points, const ParamEnv& env,
                        Real scale);

/// Max sampled coefficient of [P, Q] relative to the larger of PQ and QP,
/// the terms that cancel.
Real commutator_residual(const DiffOp& P, const DiffOp& Q, std::span<const Point> points,
                         const ParamEnv& env);

// ---------------------------------------------------------------------------
// hbar grading

/// Every scalar (fitted constant coefficient or Casimir coefficient) fitted
/// as c0 + c2 hbar^2 + c4 hbar^4 + c6 hbar^6 over several hbar values.
struct GradedEntry {
  std::string name;
  std::vector<Real> samples;  // value at each hbar
  Real c0 = 0, c2 = 0, c4 = 0, c6 = 0;
  Real odd_residual = 0;  // part not explained by the even polynomial, relative
};

struct GradingReport {
  ClassTag tag = ClassTag::I1;
  std::vector<Real> hbars;
  std::vector<GradedEntry> entries;
  const GradedEntry* find(std::string_view name) const;
};

/// Fits the structure constants (and the Casimir's H-polynomial) at each
/// hbar with the remaining parameters of env_base, then grades them.
GradingReport hbar_grading(ClassTag tag, const ParamEnv& env_base, std::span<const Real> hbars,
                           std::span<const Point> points);

/// Four even coefficients plus at least one degree of freedom for the odd residual.
inline constexpr std::size_t kMinGradingSamples = 5;

/// Grades arbitrary samples; exposed for testing.
GradedEntry grade(std::string name, std::span<const Real> hbars, std::span<const Real> values);

}  // namespace qsint
