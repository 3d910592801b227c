#pragma once

// Linear partial differential operators  sum_{i,j} c_ij(xi, eta) d^i_xi d^j_eta
// with ScalarField coefficients. Composition applies the Leibniz rule and
// leaves derivative-of-coefficient wrappers to be resolved by jet evaluation.

#include <compare>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "qsint/field.hpp"

namespace qsint {

struct MultiIndex {
  int i = 0;
  int j = 0;
  int order() const { return i + j; }
  friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;
};

class DiffOp {
 public:
  using Terms = std::map<MultiIndex, ScalarField>;

  DiffOp() = default;

  static DiffOp identity();
  static DiffOp partial(int i, int j);
  static DiffOp multiplication(const ScalarField& f);
  static DiffOp term(const ScalarField& coeff, int i, int j);

  /// Highest i + j among the stored terms; 0 for the zero operator.
  int order() const;
  const Terms& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  ScalarField coefficient(MultiIndex idx) const;

  DiffOp& operator+=(const DiffOp& other);
  DiffOp& operator-=(const DiffOp& other);

  friend DiffOp operator+(DiffOp a, const DiffOp& b) { return a += b; }
  friend DiffOp operator-(DiffOp a, const DiffOp& b) { return a -= b; }
  DiffOp operator-() const;

  /// Left multiplication by a scalar field multiplies every coefficient.
  friend DiffOp operator*(const ScalarField& s, const DiffOp& p);
  friend DiffOp operator*(Real s, const DiffOp& p) { return ScalarField(s) * p; }

  /// Operator composition P Q.
  friend DiffOp operator*(const DiffOp& p, const DiffOp& q);

 private:
  void add_term(MultiIndex idx, const ScalarField& coeff);
  Terms terms_;
};

DiffOp compose(const DiffOp& p, const DiffOp& q);
/// PQ - QP. The top-order products c d - d c cancel structurally.
DiffOp commutator(const DiffOp& p, const DiffOp& q);
DiffOp anticommutator(const DiffOp& p, const DiffOp& q);

/// Cached powers H^0, H^1, ... of one operator, shared between polynomials.
class OperatorPowers {
 public:
  explicit OperatorPowers(DiffOp base);
  const DiffOp& power(int n);
  const DiffOp& base() const { return powers_[1]; }

 private:
  std::vector<DiffOp> powers_;
};

/// c[0] Id + c[1] H + c[2] H^2 + ...
DiffOp poly_in_H(std::span<const Real> coeffs, OperatorPowers& h);
DiffOp poly_in_H(std::span<const Real> coeffs, const DiffOp& h);

/// Rewrites an operator given in (X, Y) in terms of (xi, eta) where
/// X = xmap(xi) and Y = ymap(eta): every d_X becomes (1/X'(xi)) d_xi and every
/// coefficient is precomposed with the maps.
DiffOp pullback(const DiffOp& op_xy, const ScalarField& xmap, const ScalarField& ymap);

/// Coefficient values of an operator at a set of points.
struct OperatorSamples {
  std::vector<MultiIndex> indices;
  std::vector<std::vector<Real>> values;  // [point][index]
  Real max_abs() const;
  /// Value for `idx` at point `p`, or 0 if the operator has no such term.
  Real at(std::size_t p, MultiIndex idx) const;
};

OperatorSamples sample(const DiffOp& op, std::span<const Point> points, const ParamEnv& env);

/// Max over points and terms of |coefficient|. Domain errors propagate.
Real max_coeff(const DiffOp& op, std::span<const Point> points, const ParamEnv& env);

struct MaxCoeffReport {
  Real value = 0;
  std::vector<Point> skipped;
};
/// Variant that skips (and reports) points where evaluation hits a domain error.
MaxCoeffReport max_coeff_skipping(const DiffOp& op, std::span<const Point> points,
                                  const ParamEnv& env);

/// Anything that yields a jet of the wavefunction at a point.
using WaveFunction = std::function<Jet2(Point, int order)>;

WaveFunction as_wavefunction(const ScalarField& psi, const ParamEnv& env);

/// (P psi)(p). Throws JetError if psi cannot supply jets of order P.order().
Real op_apply(const DiffOp& op, const WaveFunction& psi, Point p, const ParamEnv& env);

}  // namespace qsint
