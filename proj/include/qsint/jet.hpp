#pragma once

// Truncated bivariate Taylor jets.
//
// A Jet2 of order N at base (xi0, eta0) stores the normalized Taylor
// coefficients c[i][j] = d^i_xi d^j_eta f(xi0, eta0) / (i! j!) for i + j <= N.
// Every partial derivative used elsewhere in the library is read off a jet.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsint {

using Real = double;
// jet coefficients carry extra precision; deep operator identities cancel
// many large Leibniz terms
using JetReal = long double;

inline constexpr int kMaxJetOrder = 10;

struct Point {
  Real xi = 0;
  Real eta = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

enum class Axis { Xi, Eta };

/// Raised when an elementary function is evaluated outside its domain.
class DomainError : public std::runtime_error {
 public:
  DomainError(std::string what, Real offending);
  Real offending_value() const { return offending_; }

  /// Returns a copy with `node` prepended to the evaluation path.
  DomainError with_path(const std::string& node) const;
  const std::string& path() const { return path_; }

 private:
  Real offending_;
  std::string path_;
};

/// Order or base mismatch between jets, or a request beyond a jet's order.
class JetError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class Elementary { Exp, Ln, Sqrt, Pow, Tan, Cot, Arctan, Recip, Sin, Cos };

const char* to_string(Elementary kind);

class Jet2 {
 public:
  Jet2(int order, Point base);

  static Jet2 constant(Real value, int order, Point base);
  static Jet2 variable(Axis axis, Real value, int order, Point base);

  int order() const { return order_; }
  Point base() const { return base_; }
  std::size_t size() const { return coeffs_.size(); }

  JetReal coeff(int i, int j) const { return coeffs_[index(i, j)]; }
  JetReal& coeff(int i, int j) { return coeffs_[index(i, j)]; }
  Real value() const { return static_cast<Real>(coeffs_[0]); }

  /// d^i_xi d^j_eta f at the base point.
  Real partial(int i, int j) const;

  /// Same function, lower order. Exact: the retained coefficients are copied.
  Jet2 truncated(int order) const;

  /// Jet of d^di_xi d^dj_eta f; the order drops by di + dj.
  Jet2 derivative(int di, int dj) const;

  /// Same coefficients re-anchored at another base (used by substitution).
  Jet2 rebased(Point base) const;

  Jet2& operator+=(const Jet2& other);
  Jet2& operator-=(const Jet2& other);
  Jet2& operator*=(JetReal s);
  Jet2& operator+=(JetReal s) {
    coeffs_[0] += s;
    return *this;
  }

  friend Jet2 operator+(Jet2 a, const Jet2& b) { return a += b; }
  friend Jet2 operator-(Jet2 a, const Jet2& b) { return a -= b; }
  friend Jet2 operator*(const Jet2& a, const Jet2& b);
  friend Jet2 operator*(Jet2 a, JetReal s) { return a *= s; }
  friend Jet2 operator*(JetReal s, Jet2 a) { return a *= s; }
  friend Jet2 operator/(const Jet2& a, const Jet2& b);
  Jet2 operator-() const;

  const std::vector<JetReal>& raw() const { return coeffs_; }

  static constexpr std::size_t count(int order) {
    return static_cast<std::size_t>(order + 1) * static_cast<std::size_t>(order + 2) / 2;
  }

 private:
  // Coefficients grouped by total degree d = i + j, then by j.
  static std::size_t index(int i, int j) {
    const auto d = static_cast<std::size_t>(i + j);
    return d * (d + 1) / 2 + static_cast<std::size_t>(j);
  }
  void require_compatible(const Jet2& other, const char* op) const;

  int order_;
  Point base_;
  std::vector<JetReal> coeffs_;
};

/// Univariate composition g(a) for the elementary kinds. `r` is the exponent
/// for Elementary::Pow and ignored otherwise.
Jet2 apply(Elementary kind, const Jet2& a, Real r = 0);

inline Jet2 exp(const Jet2& a) { return apply(Elementary::Exp, a); }
inline Jet2 log(const Jet2& a) { return apply(Elementary::Ln, a); }
inline Jet2 sqrt(const Jet2& a) { return apply(Elementary::Sqrt, a); }
inline Jet2 pow(const Jet2& a, Real r) { return apply(Elementary::Pow, a, r); }
inline Jet2 tan(const Jet2& a) { return apply(Elementary::Tan, a); }
inline Jet2 cot(const Jet2& a) { return apply(Elementary::Cot, a); }
inline Jet2 atan(const Jet2& a) { return apply(Elementary::Arctan, a); }
inline Jet2 recip(const Jet2& a) { return apply(Elementary::Recip, a); }
inline Jet2 sin(const Jet2& a) { return apply(Elementary::Sin, a); }
inline Jet2 cos(const Jet2& a) { return apply(Elementary::Cos, a); }

/// Substitution: `outer` is a jet in (X, Y) at base (x.value(), y.value());
/// x and y are jets in (xi, eta). Returns the jet of outer(x(xi,eta), y(xi,eta)).
Jet2 substitute(const Jet2& outer, const Jet2& x, const Jet2& y);

/// Normalized univariate Taylor coefficients t[0..order] of g at x0.
std::vector<JetReal> taylor_coefficients(Elementary kind, JetReal x0, int order, Real r = 0);

}  // namespace qsint
