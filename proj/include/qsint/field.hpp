#pragma once

// Scalar coefficient fields of (xi, eta).
//
// A ScalarField is an immutable expression DAG over the coordinates, named
// parameters and the elementary functions of jet.hpp. Evaluation produces a
// Jet2 of any requested order; shared subexpressions are evaluated once per
// point by FieldEvaluator.

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qsint/jet.hpp"

namespace qsint {

enum class Param { Kappa, Lambda, Mu, Nu, K, L, M, N, Hbar, Eta0, E, J };

inline constexpr std::array<Param, 8> kPotentialParams = {
    Param::Kappa, Param::Lambda, Param::Mu, Param::Nu, Param::K, Param::L, Param::M, Param::N};

const char* param_name(Param p);
std::optional<Param> parse_param(std::string_view name);

/// Numeric values of every symbol a field may reference.
struct ParamEnv {
  Real kappa = 0, lambda = 0, mu = 0, nu = 0;
  Real k = 0, l = 0, m = 0, n = 0;
  Real hbar = 1;
  Real eta0 = 0;
  Real E = 0, J = 0;

  Real get(Param p) const;
  void set(Param p, Real v);
  /// Throws std::invalid_argument when hbar <= 0.
  void validate() const;
};

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
struct Node;
}

class ScalarField {
 public:
  /// The zero field.
  ScalarField();
  ScalarField(Real c);  // NOLINT: implicit constants keep formulas readable

  static ScalarField constant(Real c) { return ScalarField(c); }
  static ScalarField xi();
  static ScalarField eta();
  static ScalarField param(Param p);

  /// Antiderivative in eta of an eta-only integrand, lower limit `lower`
  /// (a coordinate-independent field). The value comes from adaptive
  /// quadrature with relative tolerance `tol`; eta-derivatives come from the
  /// integrand's jet.
  static ScalarField antiderivative(const ScalarField& integrand, const ScalarField& lower,
                                    Real tol = 1e-12);

  /// this(x(xi,eta), y(xi,eta)): precomposition with a coordinate map.
  ScalarField at(const ScalarField& x, const ScalarField& y = ScalarField()) const;

  /// d^di_xi d^dj_eta of this field, resolved lazily through jets.
  ScalarField derivative(int di, int dj) const;

  bool depends_on_xi() const;
  bool depends_on_eta() const;
  /// The constant value if this is a literal constant node.
  std::optional<Real> literal() const;
  bool is_zero() const;

  std::string to_string() const;

  const detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<const detail::Node>& node_ptr() const { return node_; }

  friend ScalarField operator+(const ScalarField& a, const ScalarField& b);
  friend ScalarField operator-(const ScalarField& a, const ScalarField& b);
  friend ScalarField operator*(const ScalarField& a, const ScalarField& b);
  friend ScalarField operator/(const ScalarField& a, const ScalarField& b);
  ScalarField operator-() const;

  friend ScalarField pow(const ScalarField& a, Real r);
  friend ScalarField apply(Elementary kind, const ScalarField& a);

  explicit ScalarField(std::shared_ptr<const detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<const detail::Node> node_;
};

inline ScalarField exp(const ScalarField& a) { return apply(Elementary::Exp, a); }
inline ScalarField log(const ScalarField& a) { return apply(Elementary::Ln, a); }
inline ScalarField sqrt(const ScalarField& a) { return apply(Elementary::Sqrt, a); }
inline ScalarField tan(const ScalarField& a) { return apply(Elementary::Tan, a); }
inline ScalarField cot(const ScalarField& a) { return apply(Elementary::Cot, a); }
inline ScalarField atan(const ScalarField& a) { return apply(Elementary::Arctan, a); }
inline ScalarField recip(const ScalarField& a) { return apply(Elementary::Recip, a); }
inline ScalarField sin(const ScalarField& a) { return apply(Elementary::Sin, a); }
inline ScalarField cos(const ScalarField& a) { return apply(Elementary::Cos, a); }

/// Polynomial c[0] + c[1] x + ... in the given variable field.
ScalarField polynomial(std::span<const Real> coeffs, const ScalarField& x);

/// Evaluates many fields at one point, sharing common subexpressions.
///
/// Each distinct node is evaluated once, at the highest order any request
/// (direct or through derivative wrappers) needs.
class FieldEvaluator {
 public:
  FieldEvaluator(const ParamEnv& env, Point p);
  ~FieldEvaluator();
  FieldEvaluator(const FieldEvaluator&) = delete;
  FieldEvaluator& operator=(const FieldEvaluator&) = delete;

  std::vector<Jet2> eval(std::span<const std::pair<ScalarField, int>> requests);
  Jet2 eval(const ScalarField& f, int order);

  /// Highest internal jet order used by the last eval call.
  int max_internal_order() const { return max_internal_order_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int max_internal_order_ = 0;
};

/// Jet of `field` at `p`. Throws DomainError (with node path) on poles or
/// branch violations and JetError when order exceeds kMaxJetOrder.
Jet2 eval(const ScalarField& field, Point p, int order, const ParamEnv& env);

/// Plain value of the field at `p`.
Real value(const ScalarField& field, Point p, const ParamEnv& env);

}  // namespace qsint
