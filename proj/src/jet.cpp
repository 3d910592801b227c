#include "qsint/jet.hpp"

#include <cmath>
#include <sstream>

namespace qsint {

namespace {

std::string describe(const std::string& what, Real value) {
  std::ostringstream os;
  os.precision(17);
  os << what << " (argument " << value << ")";
  return os.str();
}

bool is_integer(Real r) { return std::isfinite(r) && std::floor(r) == r; }

// Reciprocal of a univariate normalized series, s[0] != 0.
std::vector<JetReal> series_reciprocal(const std::vector<JetReal>& s) {
  std::vector<JetReal> r(s.size(), 0.0L);
  r[0] = 1.0L / s[0];
  for (std::size_t k = 1; k < s.size(); ++k) {
    JetReal acc = 0;
    for (std::size_t i = 1; i <= k; ++i) acc += s[i] * r[k - i];
    r[k] = -acc / s[0];
  }
  return r;
}

std::vector<JetReal> tan_series(JetReal x0, int order) {
  std::vector<JetReal> t(static_cast<std::size_t>(order) + 1, 0.0);
  t[0] = std::tan(x0);
  for (int k = 0; k < order; ++k) {
    JetReal sq = 0;
    for (int i = 0; i <= k; ++i) sq += t[i] * t[k - i];
    t[k + 1] = ((k == 0 ? 1.0L : 0.0L) + sq) / (k + 1);
  }
  return t;
}

}  // namespace

DomainError::DomainError(std::string what, Real offending)
    : std::runtime_error(describe(what, offending)), offending_(offending) {}

DomainError DomainError::with_path(const std::string& node) const {
  DomainError e(*this);
  e.path_ = path_.empty() ? node : node + "/" + path_;
  return e;
}

const char* to_string(Elementary kind) {
  switch (kind) {
    case Elementary::Exp: return "exp";
    case Elementary::Ln: return "ln";
    case Elementary::Sqrt: return "sqrt";
    case Elementary::Pow: return "pow";
    case Elementary::Tan: return "tan";
    case Elementary::Cot: return "cot";
    case Elementary::Arctan: return "arctan";
    case Elementary::Recip: return "recip";
    case Elementary::Sin: return "sin";
    case Elementary::Cos: return "cos";
  }
  return "?";
}

Jet2::Jet2(int order, Point base) : order_(order), base_(base) {
  if (order < 0) throw JetError("jet order must be non-negative");
  coeffs_.assign(count(order), 0.0);
}

Jet2 Jet2::constant(Real value, int order, Point base) {
  Jet2 j(order, base);
  j.coeffs_[0] = value;
  return j;
}

Jet2 Jet2::variable(Axis axis, Real value, int order, Point base) {
  Jet2 j(order, base);
  j.coeffs_[0] = value;
  if (order >= 1) {
    if (axis == Axis::Xi)
      j.coeff(1, 0) = 1;
    else
      j.coeff(0, 1) = 1;
  }
  return j;
}

Real Jet2::partial(int i, int j) const {
  if (i < 0 || j < 0 || i + j > order_)
    throw JetError("partial derivative exceeds jet order");
  return static_cast<Real>(std::tgamma(i + 1.0L) * std::tgamma(j + 1.0L) * coeff(i, j));
}

Jet2 Jet2::truncated(int order) const {
  if (order > order_) throw JetError("cannot raise jet order by truncation");
  Jet2 out(order, base_);
  std::copy_n(coeffs_.begin(), out.coeffs_.size(), out.coeffs_.begin());
  return out;
}

Jet2 Jet2::derivative(int di, int dj) const {
  if (di < 0 || dj < 0 || di + dj > order_)
    throw JetError("derivative exceeds jet order");
  Jet2 out(order_ - di - dj, base_);
  for (int d = 0; d <= out.order_; ++d) {
    for (int j = 0; j <= d; ++j) {
      const int i = d - j;
      JetReal scale = 1;
      for (int t = 1; t <= di; ++t) scale *= i + t;
      for (int t = 1; t <= dj; ++t) scale *= j + t;
      out.coeff(i, j) = scale * coeff(i + di, j + dj);
    }
  }
  return out;
}

Jet2 Jet2::rebased(Point base) const {
  Jet2 out(*this);
  out.base_ = base;
  return out;
}

void Jet2::require_compatible(const Jet2& other, const char* op) const {
  if (order_ != other.order_)
    throw JetError(std::string("jet ") + op + ": order mismatch");
  if (!(base_ == other.base_))
    throw JetError(std::string("jet ") + op + ": base point mismatch");
}

Jet2& Jet2::operator+=(const Jet2& other) {
  require_compatible(other, "add");
  for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] += other.coeffs_[k];
  return *this;
}

Jet2& Jet2::operator-=(const Jet2& other) {
  require_compatible(other, "sub");
  for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] -= other.coeffs_[k];
  return *this;
}

Jet2& Jet2::operator*=(JetReal s) {
  for (auto& c : coeffs_) c *= s;
  return *this;
}

Jet2 Jet2::operator-() const {
  Jet2 out(*this);
  for (auto& c : out.coeffs_) c = -c;
  return out;
}

Jet2 operator*(const Jet2& a, const Jet2& b) {
  a.require_compatible(b, "mul");
  Jet2 out(a.order_, a.base_);
  const int n = a.order_;
  for (int p = 0; p <= n; ++p) {
    for (int q = 0; p + q <= n; ++q) {
      const JetReal ap = a.coeff(p, q);
      if (ap == 0) continue;
      for (int r = 0; p + q + r <= n; ++r) {
        for (int s = 0; p + q + r + s <= n; ++s) {
          out.coeff(p + r, q + s) += ap * b.coeff(r, s);
        }
      }
    }
  }
  return out;
}

Jet2 operator/(const Jet2& a, const Jet2& b) {
  a.require_compatible(b, "div");
  return a * recip(b);
}

std::vector<JetReal> taylor_coefficients(Elementary kind, JetReal x0, int order, Real r) {
  const auto n = static_cast<std::size_t>(order) + 1;
  std::vector<JetReal> t(n, 0.0);
  switch (kind) {
    case Elementary::Exp: {
      JetReal term = std::exp(x0);
      for (std::size_t k = 0; k < n; ++k) {
        t[k] = term;
        term /= static_cast<JetReal>(k + 1);
      }
      break;
    }
    case Elementary::Ln: {
      if (!(x0 > 0)) throw DomainError("ln requires a positive argument", static_cast<Real>(x0));
      t[0] = std::log(x0);
      JetReal inv_pow = 1;
      for (std::size_t k = 1; k < n; ++k) {
        inv_pow /= x0;
        t[k] = ((k % 2 == 1) ? 1.0L : -1.0L) * inv_pow / static_cast<JetReal>(k);
      }
      break;
    }
    case Elementary::Sqrt:
      if (!(x0 > 0)) throw DomainError("sqrt requires a positive argument", static_cast<Real>(x0));
      return taylor_coefficients(Elementary::Pow, x0, order, 0.5);
    case Elementary::Pow: {
      if (is_integer(r) && r >= 0) {
        // Polynomial power: exact binomial expansion, valid for any x0.
        JetReal binom = 1;
        for (std::size_t k = 0; k < n && static_cast<JetReal>(k) <= r; ++k) {
          t[k] = binom * std::pow(x0, r - static_cast<JetReal>(k));
          binom = binom * (r - static_cast<JetReal>(k)) / static_cast<JetReal>(k + 1);
        }
        break;
      }
      if (x0 == 0) throw DomainError("pow with negative or fractional exponent at zero", static_cast<Real>(x0));
      if (x0 < 0 && !is_integer(r))
        throw DomainError("pow with fractional exponent requires a positive argument", static_cast<Real>(x0));
      t[0] = std::pow(x0, r);
      for (std::size_t k = 1; k < n; ++k)
        t[k] = t[k - 1] * (r - static_cast<JetReal>(k) + 1) / (static_cast<JetReal>(k) * x0);
      break;
    }
    case Elementary::Recip: {
      if (x0 == 0) throw DomainError("reciprocal of zero", static_cast<Real>(x0));
      JetReal v = 1.0L / x0;
      for (std::size_t k = 0; k < n; ++k) {
        t[k] = v;
        v = -v / x0;
      }
      break;
    }
    case Elementary::Tan:
      if (std::abs(std::cos(x0)) < 1e-15L) throw DomainError("tan at a pole", static_cast<Real>(x0));
      return tan_series(x0, order);
    case Elementary::Cot:
      if (std::abs(std::cos(x0)) < 1e-15L || std::abs(std::sin(x0)) < 1e-15L)
        throw DomainError("cot at a pole of tan or cot", static_cast<Real>(x0));
      return series_reciprocal(tan_series(x0, order));
    case Elementary::Arctan: {
      const std::vector<JetReal> q{1 + x0 * x0, 2 * x0, 1};
      std::vector<JetReal> inv(n, 0.0);
      inv[0] = 1.0L / q[0];
      for (std::size_t k = 1; k < n; ++k) {
        JetReal acc = q[1] * inv[k - 1];
        if (k >= 2) acc += q[2] * inv[k - 2];
        inv[k] = -acc / q[0];
      }
      t[0] = std::atan(x0);
      for (std::size_t k = 1; k < n; ++k) t[k] = inv[k - 1] / static_cast<JetReal>(k);
      break;
    }
    case Elementary::Sin:
    case Elementary::Cos: {
      const JetReal s = std::sin(x0), c = std::cos(x0);
      // Derivative cycle of sin: sin, cos, -sin, -cos.
      const JetReal cyc_sin[4] = {s, c, -s, -c};
      const JetReal cyc_cos[4] = {c, -s, -c, s};
      JetReal fact = 1;
      for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) fact *= static_cast<JetReal>(k);
        t[k] = (kind == Elementary::Sin ? cyc_sin[k % 4] : cyc_cos[k % 4]) / fact;
      }
      break;
    }
  }
  return t;
}

Jet2 apply(Elementary kind, const Jet2& a, Real r) {
  if (kind == Elementary::Cot) {
    const JetReal x0 = a.coeff(0, 0);
    if (std::abs(std::sin(x0)) < 1e-15 || std::abs(std::cos(x0)) < 1e-15)
      throw DomainError("cot at a pole of tan or cot", static_cast<Real>(x0));
    return recip(tan(a));
  }
  const auto t = taylor_coefficients(kind, a.coeff(0, 0), a.order(), r);
  Jet2 h = a;
  h.coeff(0, 0) = 0;
  // Horner: g(a0 + h) = t0 + h (t1 + h (t2 + ...)).
  Jet2 result = Jet2::constant(t[static_cast<std::size_t>(a.order())], a.order(), a.base());
  for (int k = a.order() - 1; k >= 0; --k) {
    result = result * h;
    result += t[static_cast<std::size_t>(k)];
  }
  return result;
}

Jet2 substitute(const Jet2& outer, const Jet2& x, const Jet2& y) {
  if (x.order() != y.order() || !(x.base() == y.base()))
    throw JetError("substitute: inner jets must share order and base");
  const int n = x.order();
  if (outer.order() < n) throw JetError("substitute: outer jet order too low");
  const Real tol = 1e-12 * (1 + std::abs(x.value()) + std::abs(y.value()));
  if (std::abs(outer.base().xi - x.value()) > tol || std::abs(outer.base().eta - y.value()) > tol)
    throw JetError("substitute: outer base does not match inner values");

  // the outer base is a double; keep the offset to the exact inner value and
  // re-expand, which costs one extra order of the outer jet
  const int m = outer.order();
  Jet2 dx = x;
  dx.coeff(0, 0) -= outer.base().xi;
  Jet2 dy = y;
  dy.coeff(0, 0) -= outer.base().eta;
  std::vector<Jet2> ypow;
  ypow.reserve(static_cast<std::size_t>(m) + 1);
  ypow.push_back(Jet2::constant(1, n, x.base()));
  for (int j = 1; j <= m; ++j) ypow.push_back(ypow.back() * dy);

  auto row = [&](int i) {
    Jet2 acc(n, x.base());
    for (int j = 0; i + j <= m; ++j) {
      const JetReal c = outer.coeff(i, j);
      if (c != 0) acc += c * ypow[static_cast<std::size_t>(j)];
    }
    return acc;
  };
  Jet2 result = row(m);
  for (int i = m - 1; i >= 0; --i) {
    result = result * dx;
    result += row(i);
  }
  return result;
}

}  // namespace qsint
