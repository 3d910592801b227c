#include "qsint/diffop.hpp"

#include <cmath>
#include <stdexcept>

namespace qsint {

namespace {

Real binomial(int n, int k) {
  Real b = 1;
  for (int t = 1; t <= k; ++t) b = b * (n - k + t) / t;
  return b;
}

// Leibniz expansion of P Q. With skip_undifferentiated, the r = a terms
// (no derivative landing on Q's coefficient) are omitted.
DiffOp leibniz(const DiffOp& p, const DiffOp& q, bool skip_undifferentiated) {
  DiffOp out;
  for (const auto& [a, c] : p.terms()) {
    for (const auto& [b, d] : q.terms()) {
      for (int r1 = 0; r1 <= a.i; ++r1) {
        for (int r2 = 0; r2 <= a.j; ++r2) {
          const int di = a.i - r1, dj = a.j - r2;
          if (skip_undifferentiated && di == 0 && dj == 0) continue;
          ScalarField dd = d.derivative(di, dj);
          if (dd.is_zero()) continue;
          const Real w = binomial(a.i, r1) * binomial(a.j, r2);
          out += DiffOp::term(ScalarField(w) * c * dd, b.i + r1, b.j + r2);
        }
      }
    }
  }
  return out;
}

}  // namespace

DiffOp DiffOp::identity() { return term(ScalarField(1.0), 0, 0); }
DiffOp DiffOp::partial(int i, int j) { return term(ScalarField(1.0), i, j); }
DiffOp DiffOp::multiplication(const ScalarField& f) { return term(f, 0, 0); }

DiffOp DiffOp::term(const ScalarField& coeff, int i, int j) {
  if (i < 0 || j < 0) throw std::invalid_argument("negative derivative multi-index");
  DiffOp op;
  op.add_term({i, j}, coeff);
  return op;
}

int DiffOp::order() const {
  int o = 0;
  for (const auto& [idx, c] : terms_) o = std::max(o, idx.order());
  return o;
}

ScalarField DiffOp::coefficient(MultiIndex idx) const {
  auto it = terms_.find(idx);
  return it == terms_.end() ? ScalarField() : it->second;
}

void DiffOp::add_term(MultiIndex idx, const ScalarField& coeff) {
  if (coeff.is_zero()) return;
  auto it = terms_.find(idx);
  if (it == terms_.end()) {
    terms_.emplace(idx, coeff);
    return;
  }
  it->second = it->second + coeff;
  if (it->second.is_zero()) terms_.erase(it);
}

DiffOp& DiffOp::operator+=(const DiffOp& other) {
  for (const auto& [idx, c] : other.terms_) add_term(idx, c);
  return *this;
}

DiffOp& DiffOp::operator-=(const DiffOp& other) {
  for (const auto& [idx, c] : other.terms_) add_term(idx, -c);
  return *this;
}

DiffOp DiffOp::operator-() const {
  DiffOp out;
  for (const auto& [idx, c] : terms_) out.add_term(idx, -c);
  return out;
}

DiffOp operator*(const ScalarField& s, const DiffOp& p) {
  DiffOp out;
  for (const auto& [idx, c] : p.terms_) out.add_term(idx, s * c);
  return out;
}

DiffOp operator*(const DiffOp& p, const DiffOp& q) { return leibniz(p, q, false); }

DiffOp compose(const DiffOp& p, const DiffOp& q) { return p * q; }

DiffOp commutator(const DiffOp& p, const DiffOp& q) {
  return leibniz(p, q, true) - leibniz(q, p, true);
}

DiffOp anticommutator(const DiffOp& p, const DiffOp& q) { return p * q + q * p; }

OperatorPowers::OperatorPowers(DiffOp base) {
  powers_.push_back(DiffOp::identity());
  powers_.push_back(std::move(base));
}

const DiffOp& OperatorPowers::power(int n) {
  if (n < 0) throw std::invalid_argument("negative operator power");
  while (static_cast<int>(powers_.size()) <= n) powers_.push_back(powers_[1] * powers_.back());
  return powers_[static_cast<std::size_t>(n)];
}

DiffOp poly_in_H(std::span<const Real> coeffs, OperatorPowers& h) {
  DiffOp out;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    if (coeffs[k] == 0) continue;
    out += coeffs[k] * h.power(static_cast<int>(k));
  }
  return out;
}

DiffOp poly_in_H(std::span<const Real> coeffs, const DiffOp& h) {
  OperatorPowers powers(h);
  return poly_in_H(coeffs, powers);
}

DiffOp pullback(const DiffOp& op_xy, const ScalarField& xmap, const ScalarField& ymap) {
  if (xmap.depends_on_eta() || ymap.depends_on_xi())
    throw std::invalid_argument("pullback: maps must be X(xi) and Y(eta)");
  const ScalarField one(1.0);
  const DiffOp dx = DiffOp::term(one / xmap.derivative(1, 0), 1, 0);
  const DiffOp dy = DiffOp::term(one / ymap.derivative(0, 1), 0, 1);
  OperatorPowers px(dx), py(dy);
  DiffOp out;
  for (const auto& [idx, c] : op_xy.terms()) {
    const DiffOp d = px.power(idx.i) * py.power(idx.j);
    out += c.at(xmap, ymap) * d;
  }
  return out;
}

Real OperatorSamples::max_abs() const {
  Real m = 0;
  for (const auto& row : values)
    for (Real v : row) m = std::max(m, std::abs(v));
  return m;
}

Real OperatorSamples::at(std::size_t p, MultiIndex idx) const {
  for (std::size_t k = 0; k < indices.size(); ++k)
    if (indices[k] == idx) return values[p][k];
  return 0;
}

OperatorSamples sample(const DiffOp& op, std::span<const Point> points, const ParamEnv& env) {
  OperatorSamples s;
  std::vector<std::pair<ScalarField, int>> req;
  for (const auto& [idx, c] : op.terms()) {
    s.indices.push_back(idx);
    req.emplace_back(c, 0);
  }
  for (const Point& p : points) {
    FieldEvaluator ev(env, p);
    auto jets = ev.eval(req);
    std::vector<Real> row;
    row.reserve(jets.size());
    for (const auto& j : jets) row.push_back(j.value());
    s.values.push_back(std::move(row));
  }
  return s;
}

Real max_coeff(const DiffOp& op, std::span<const Point> points, const ParamEnv& env) {
  return sample(op, points, env).max_abs();
}

MaxCoeffReport max_coeff_skipping(const DiffOp& op, std::span<const Point> points,
                                  const ParamEnv& env) {
  MaxCoeffReport r;
  for (const Point& p : points) {
    try {
      r.value = std::max(r.value, max_coeff(op, std::span<const Point>(&p, 1), env));
    } catch (const DomainError&) {
      r.skipped.push_back(p);
    }
  }
  return r;
}

WaveFunction as_wavefunction(const ScalarField& psi, const ParamEnv& env) {
  return [psi, env](Point p, int order) { return eval(psi, p, order, env); };
}

Real op_apply(const DiffOp& op, const WaveFunction& psi, Point p, const ParamEnv& env) {
  const int order = op.order();
  Jet2 jet = psi(p, order);
  if (jet.order() < order) throw JetError("wavefunction jet order below operator order");
  const auto s = sample(op, std::span<const Point>(&p, 1), env);
  Real acc = 0;
  for (std::size_t k = 0; k < s.indices.size(); ++k)
    acc += s.values[0][k] * jet.partial(s.indices[k].i, s.indices[k].j);
  return acc;
}

}  // namespace qsint
