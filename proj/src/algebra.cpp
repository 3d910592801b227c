#include "qsint/algebra.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace qsint {

// ---------------------------------------------------------------------------
// PolyInH

PolyInH::PolyInH(std::vector<Real> coeffs) : c_(std::move(coeffs)) {}

int PolyInH::degree() const {
  for (int k = static_cast<int>(c_.size()) - 1; k >= 0; --k)
    if (c_[k] != 0) return k;
  return -1;
}

std::vector<Real> PolyInH::padded(std::size_t n) const {
  std::vector<Real> out(n, 0.0);
  for (std::size_t k = 0; k < std::min(n, c_.size()); ++k) out[k] = c_[k];
  return out;
}

PolyInH& PolyInH::operator+=(const PolyInH& o) {
  if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), 0.0);
  for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] += o.c_[k];
  return *this;
}

PolyInH& PolyInH::operator-=(const PolyInH& o) {
  if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), 0.0);
  for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] -= o.c_[k];
  return *this;
}

PolyInH operator*(const PolyInH& a, const PolyInH& b) {
  if (a.c_.empty() || b.c_.empty()) return PolyInH();
  std::vector<Real> out(a.c_.size() + b.c_.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.c_.size(); ++i)
    for (std::size_t j = 0; j < b.c_.size(); ++j) out[i + j] += a.c_[i] * b.c_[j];
  return PolyInH(std::move(out));
}

PolyInH pow(const PolyInH& a, int n) {
  PolyInH out(1.0);
  for (int i = 0; i < n; ++i) out = out * a;
  return out;
}

std::string PolyInH::to_string() const {
  std::ostringstream os;
  os.precision(10);
  bool first = true;
  for (int k = degree(); k >= 0; --k) {
    if (c_[k] == 0) continue;
    if (!first) os << (c_[k] < 0 ? " - " : " + ");
    else if (c_[k] < 0) os << "-";
    os << std::abs(c_[k]);
    if (k >= 1) os << " H";
    if (k >= 2) os << "^" << k;
    first = false;
  }
  if (first) os << "0";
  return os.str();
}

// ---------------------------------------------------------------------------
// Constants

const std::vector<std::string>& constant_names() {
  static const std::vector<std::string> names = {
      "alpha", "beta",  "gamma", "a",     "delta1", "delta0", "epsilon1", "epsilon0",
      "zeta2", "zeta1", "zeta0", "d1",    "d0",     "z2",     "z1",       "z0"};
  return names;
}

std::vector<Real> flatten(const AlgebraConstants& c) {
  auto d = c.delta.padded(2), e = c.epsilon.padded(2), z = c.zeta.padded(3), dd = c.d.padded(2),
       zz = c.z.padded(3);
  return {c.alpha, c.beta, c.gamma, c.a, d[1],  d[0],  e[1],  e[0],
          z[2],    z[1],   z[0],    dd[1], dd[0], zz[2], zz[1], zz[0]};
}

AlgebraConstants unflatten(std::span<const Real> v) {
  if (v.size() != 16) throw std::invalid_argument("expected 16 constants");
  AlgebraConstants c;
  c.alpha = v[0], c.beta = v[1], c.gamma = v[2], c.a = v[3];
  c.delta = PolyInH({v[5], v[4]});
  c.epsilon = PolyInH({v[7], v[6]});
  c.zeta = PolyInH({v[10], v[9], v[8]});
  c.d = PolyInH({v[12], v[11]});
  c.z = PolyInH({v[15], v[14], v[13]});
  return c;
}

namespace {

struct Lins {
  PolyInH kap, lam, mu, nu;  // (param H - matching potential parameter)
  Real h2, h4, h6;
};

Lins lins(const ParamEnv& e) {
  const Real h2 = e.hbar * e.hbar;
  return {PolyInH::linear(e.kappa, -e.k), PolyInH::linear(e.lambda, -e.l),
          PolyInH::linear(e.mu, -e.m),    PolyInH::linear(e.nu, -e.n),
          h2,                             h2 * h2,
          h2 * h2 * h2};
}

AlgebraConstants constants_impl(ClassTag tag, const ParamEnv& env, bool corrected) {
  const Lins L = lins(env);
  const Real h2 = L.h2, h4 = L.h4;
  AlgebraConstants c;
  switch (tag) {
    case ClassTag::I1:
      c.a = 6 * h2;
      c.delta = -16 * h2 * L.kap;
      c.epsilon = -256 * h2 * L.lam;
      c.zeta = 32 * h2 * L.kap * L.nu;
      c.d = corrected ? -8 * h2 * L.nu : -8 * L.nu;
      c.z = -8 * h2 * pow(L.nu, 2) + 128 * h2 * L.mu * L.lam - 96 * h4 * L.lam;
      break;
    case ClassTag::I2:
      c.alpha = -8 * h2;
      c.epsilon = -256 * h2 * L.lam;
      c.zeta = 32 * h2 * pow(L.nu, 2) - 256 * h2 * L.lam * (L.mu - L.kap) + 128 * h4 * L.lam;
      c.d = PolyInH(16 * h4);
      c.z = -32 * h2 * (L.kap + L.mu) * L.nu;
      break;
    case ClassTag::I3: {
      c.alpha = 32 * h2;
      c.gamma = -8 * h2;
      c.delta = PolyInH(32 * h4);
      c.epsilon = PolyInH(-16 * h4);
      c.zeta = 32 * h2 * L.lam * L.nu;
      if (corrected)
        c.d = 64 * h2 * L.kap - 64 * h2 * L.mu + PolyInH(256 * h4);
      else
        c.d = -64 * h2 * L.kap + 64 * h2 * PolyInH::linear(env.mu, -env.mu) + PolyInH(256 * h4);
      const PolyInH diff = PolyInH::linear(env.lambda - env.nu, -(env.l - env.n));
      c.z = -32 * h2 * pow(diff, 2) + 32 * h2 * L.kap * L.mu + 32 * h4 * L.mu - 32 * h4 * L.kap;
      break;
    }
    case ClassTag::II1: {
      const PolyInH k_minus = PolyInH::linear(-env.kappa, env.k);  // k - kappa H
      c.delta = -8 * h2 * k_minus;
      c.zeta = -8 * h2 * pow(L.lam, 2);
      c.d = -16 * h2 * k_minus;
      c.z = -8 * h2 * pow(L.lam, 2) + 8 * h2 * pow(L.mu, 2);
      break;
    }
    case ClassTag::II2:
      c.a = 6 * h2;
      c.delta = -4 * h2 * PolyInH::linear(-env.lambda, env.l);  // l - lambda H
      c.zeta = -8 * h2 * pow(L.kap, 2);
      c.d = -8 * h2 * L.nu;
      c.z = 8 * h2 * L.kap * L.mu + 2 * h2 * pow(L.nu, 2);
      break;
    case ClassTag::II3:
      c.alpha = -8 * h2;
      c.zeta = -32 * h2 * L.kap * L.lam;
      c.d = PolyInH(16 * h4);
      c.z = -32 * h2 * L.mu * L.nu;
      break;
  }
  return c;
}

}  // namespace

AlgebraConstants printed_constants(ClassTag tag, const ParamEnv& env) {
  return constants_impl(tag, env, false);
}

AlgebraConstants corrected_constants(ClassTag tag, const ParamEnv& env) {
  return constants_impl(tag, env, true);
}

const std::vector<TypoCorrection>& known_typos() {
  static const std::vector<TypoCorrection> typos = {
      {ClassTag::I1, "d", "-8(nu H - n)", "-8 hbar^2 (nu H - n)"},
      {ClassTag::I3, "d", "-64 hbar^2 (kappa H - k) + 64 hbar^2 (mu H - mu) + 256 hbar^4",
       "64 hbar^2 (kappa H - k) - 64 hbar^2 (mu H - m) + 256 hbar^4"},
      {ClassTag::I1, "K", "+48 hbar^4 (kappa H - k)^2", "-48 hbar^4 (kappa H - k)^2"},
      {ClassTag::I2, "K", "+4 hbar^6 (lambda H - l)", "+512 hbar^6 (lambda H - l)"},
      {ClassTag::I3, "K", "+128 hbar^4 (nu H - n)", "+128 hbar^4 (nu H - n)^2"},
  };
  return typos;
}

namespace {

PolyInH casimir_impl(ClassTag tag, const ParamEnv& env, bool corrected) {
  const Lins L = lins(env);
  const Real h2 = L.h2, h4 = L.h4, h6 = L.h6;
  switch (tag) {
    case ClassTag::I1:
      return -32 * h2 * pow(L.nu, 3) - 512 * h2 * L.lam * L.nu * L.mu +
             64 * h2 * pow(L.kap, 2) * L.mu - 640 * h4 * L.lam * L.nu +
             (corrected ? -48 : 48) * h4 * pow(L.kap, 2);
    case ClassTag::I2:
      return -256 * h2 * L.lam * pow(L.kap + L.mu, 2) -
             128 * h2 * (L.kap - L.mu) * pow(L.nu, 2) +
             128 * h4 * (pow(L.nu, 2) + 4 * L.lam * (L.kap - L.mu)) + (corrected ? 512 : 4) * h6 * L.lam;
    case ClassTag::I3:
      return -64 * h2 * L.kap * pow(L.nu, 2) + 64 * h2 * pow(L.lam, 2) * L.mu -
             512 * h4 * L.nu * L.lam - 64 * h4 * L.mu * L.kap + 128 * h4 * pow(L.lam, 2) +
             128 * h4 * (corrected ? pow(L.nu, 2) : L.nu) + 128 * h6 * L.kap - 128 * h6 * L.mu;
    case ClassTag::II1: {
      const PolyInH k_minus = PolyInH::linear(-env.kappa, env.k);
      return -16 * h2 * pow(L.nu, 2) * L.kap + 32 * h2 * L.lam * L.mu * L.nu -
             16 * h4 * pow(k_minus, 2);
    }
    case ClassTag::II2: {
      const PolyInH l_minus = PolyInH::linear(-env.lambda, env.l);
      return -8 * h2 * L.lam * pow(L.mu, 2) + 16 * h2 * L.kap * L.mu * L.nu -
             4 * h4 * pow(l_minus, 2);
    }
    case ClassTag::II3: {
      const PolyInH k_minus = PolyInH::linear(-env.kappa, env.k);
      return -64 * h2 * L.lam * pow(L.mu, 2) + 64 * h2 * L.kap * pow(L.nu, 2) +
             64 * h4 * k_minus * L.lam;
    }
  }
  return {};
}

}  // namespace

PolyInH printed_casimir(ClassTag tag, const ParamEnv& env) { return casimir_impl(tag, env, false); }

PolyInH corrected_casimir(ClassTag tag, const ParamEnv& env) {
  return casimir_impl(tag, env, true);
}

// ---------------------------------------------------------------------------
// Operators

DiffOp compute_C(const DiffOp& A, const DiffOp& B) { return commutator(A, B); }

AlgebraOperators::AlgebraOperators(DiffOp H, DiffOp A, DiffOp B)
    : H_(std::move(H)), A_(std::move(A)), B_(std::move(B)), powers_(H_) {}

#define QSINT_CACHED(slot, expr) \
  if (!slot) slot = (expr);      \
  return *slot

const DiffOp& AlgebraOperators::C() { QSINT_CACHED(C_, commutator(A_, B_)); }
const DiffOp& AlgebraOperators::AC() { QSINT_CACHED(AC_, commutator(A_, C())); }
const DiffOp& AlgebraOperators::BC() { QSINT_CACHED(BC_, commutator(B_, C())); }
const DiffOp& AlgebraOperators::A2() { QSINT_CACHED(A2_, A_ * A_); }
const DiffOp& AlgebraOperators::B2() { QSINT_CACHED(B2_, B_ * B_); }
const DiffOp& AlgebraOperators::AB_anti() { QSINT_CACHED(ABa_, A_ * B_ + B_ * A_); }
const DiffOp& AlgebraOperators::HA() { QSINT_CACHED(HA_, H_ * A_); }
const DiffOp& AlgebraOperators::HB() { QSINT_CACHED(HB_, H_ * B_); }

#undef QSINT_CACHED

namespace {

using Sampled = std::map<MultiIndex, Real>;

// Coefficients of several operators at one point, sharing one evaluator.
std::vector<Sampled> sample_at(std::span<const DiffOp* const> ops, Point p, const ParamEnv& env) {
  std::vector<std::pair<ScalarField, int>> req;
  for (const DiffOp* op : ops)
    for (const auto& [idx, c] : op->terms()) req.emplace_back(c, 0);
  FieldEvaluator ev(env, p);
  const auto jets = ev.eval(req);
  std::vector<Sampled> out(ops.size());
  std::size_t k = 0;
  for (std::size_t o = 0; o < ops.size(); ++o)
    for (const auto& [idx, c] : ops[o]->terms()) out[o][idx] = jets[k++].value();
  return out;
}

Real max_abs(const Sampled& s) {
  Real m = 0;
  for (const auto& [idx, v] : s) m = std::max(m, std::abs(v));
  return m;
}

DiffOp poly_times(const PolyInH& p, OperatorPowers& h, const DiffOp& x) {
  DiffOp out;
  const auto& c = p.coeffs();
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (c[k] == 0) continue;
    out += k == 0 ? c[k] * x : c[k] * (h.power(static_cast<int>(k)) * x);
  }
  return out;
}

DiffOp poly_op(const PolyInH& p, OperatorPowers& h) { return poly_in_H(p.coeffs(), h); }

}  // namespace

Real relative_max_coeff(const DiffOp& P, std::span<const Point> points, const ParamEnv& env,
                        Real scale) {
  return max_coeff(P, points, env) / std::max<Real>(1, scale);
}

Real commutator_residual(const DiffOp& P, const DiffOp& Q, std::span<const Point> points,
                         const ParamEnv& env) {
  const Real scale = std::max(max_coeff(P * Q, points, env), max_coeff(Q * P, points, env));
  const Real c = max_coeff(commutator(P, Q), points, env);
  if (scale == 0) return c;
  return c / scale;
}

RelationResiduals relation_residuals(AlgebraOperators& ops, const AlgebraConstants& c,
                                     std::span<const Point> points, const ParamEnv& env) {
  OperatorPowers& h = ops.powers();
  const DiffOp rhs1 = c.alpha * ops.A2() + c.beta * ops.B2() + c.gamma * ops.AB_anti() +
                      poly_times(c.delta, h, ops.A()) + poly_times(c.epsilon, h, ops.B()) +
                      poly_op(c.zeta, h);
  const DiffOp rhs2 = c.a * ops.A2() - c.gamma * ops.B2() - c.alpha * ops.AB_anti() +
                      poly_times(c.d, h, ops.A()) - poly_times(c.delta, h, ops.B()) +
                      poly_op(c.z, h);
  const DiffOp defect1 = ops.AC() - rhs1;
  const DiffOp defect2 = ops.BC() - rhs2;
  RelationResiduals r;
  for (const Point& p : points) {
    const DiffOp* list[] = {&defect1, &defect2, &ops.AC(), &ops.BC()};
    const auto s = sample_at(list, p, env);
    r.r1 = std::max(r.r1, max_abs(s[0]) / std::max<Real>(1, max_abs(s[2])));
    r.r2 = std::max(r.r2, max_abs(s[1]) / std::max<Real>(1, max_abs(s[3])));
  }
  return r;
}

FitResult fit_constants(AlgebraOperators& ops, std::span<const Point> points,
                        const ParamEnv& env) {
  OperatorPowers& h = ops.powers();
  // Basis order: A^2, B^2, {A,B}, HA, A, HB, B, H^2, H, 1.
  const DiffOp one = DiffOp::identity();
  const DiffOp* basis[] = {&ops.A2(), &ops.B2(), &ops.AB_anti(), &ops.HA(), &ops.A(),
                           &ops.HB(), &ops.B(),  &h.power(2),    &h.power(1), &one};
  constexpr int kBasis = 10;
  // Column of each unknown for the two relations, with sign.
  struct Use {
    int basis;
    Real sign;
  };
  // unknowns: alpha beta gamma a delta1 delta0 eps1 eps0 zeta2 zeta1 zeta0 d1 d0 z2 z1 z0
  const std::vector<std::vector<Use>> rel1 = {{{0, 1}}, {{1, 1}}, {{2, 1}}, {}, {{3, 1}},
                                              {{4, 1}}, {{5, 1}}, {{6, 1}}, {{7, 1}}, {{8, 1}},
                                              {{9, 1}}, {},       {},       {},       {}, {}};
  const std::vector<std::vector<Use>> rel2 = {{{2, -1}}, {},       {{1, -1}}, {{0, 1}},
                                              {{5, -1}}, {{6, -1}}, {},        {},
                                              {},        {},        {},        {{3, 1}},
                                              {{4, 1}},  {{7, 1}},  {{8, 1}},  {{9, 1}}};
  constexpr int kUnknowns = 16;

  std::vector<std::array<Real, kUnknowns>> rows;
  std::vector<Real> rhs;
  for (const Point& p : points) {
    std::vector<const DiffOp*> list(std::begin(basis), std::end(basis));
    list.push_back(&ops.AC());
    list.push_back(&ops.BC());
    const auto s = sample_at(list, p, env);
    std::vector<MultiIndex> indices;
    for (const auto& smp : s)
      for (const auto& [idx, v] : smp) indices.push_back(idx);
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    auto val = [&](int op, MultiIndex idx) {
      auto it = s[op].find(idx);
      return it == s[op].end() ? 0.0 : it->second;
    };
    for (int rel = 0; rel < 2; ++rel) {
      const auto& uses = rel == 0 ? rel1 : rel2;
      for (MultiIndex idx : indices) {
        std::array<Real, kUnknowns> row{};
        for (int u = 0; u < kUnknowns; ++u)
          for (const Use& use : uses[u]) row[u] += use.sign * val(use.basis, idx);
        rows.push_back(row);
        rhs.push_back(val(kBasis + rel, idx));
      }
    }
  }

  const int m = static_cast<int>(rows.size());
  Eigen::MatrixXd M(m, kUnknowns);
  Eigen::VectorXd b(m);
  for (int r = 0; r < m; ++r) {
    Real scale = std::max<Real>(1, std::abs(rhs[r]));
    for (int u = 0; u < kUnknowns; ++u) scale = std::max(scale, std::abs(rows[r][u]));
    for (int u = 0; u < kUnknowns; ++u) M(r, u) = rows[r][u] / scale;
    b(r) = rhs[r] / scale;
  }
  Eigen::VectorXd colscale(kUnknowns);
  for (int u = 0; u < kUnknowns; ++u) {
    const Real n = M.col(u).norm();
    colscale(u) = n > 0 ? 1.0 / n : 1.0;
    M.col(u) *= colscale(u);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  FitResult out;
  out.rows = m;
  for (int k = 0; k < sv.size(); ++k) out.singular_values.push_back(sv(k));
  int deficient = 0;
  for (int k = 0; k < sv.size(); ++k)
    if (!(sv(k) > 1e-10 * sv(0))) ++deficient;
  if (deficient > 0 || m < kUnknowns)
    throw RankDeficient("structure-constant basis is rank deficient (deficiency " +
                            std::to_string(std::max(deficient, kUnknowns - m)) + ")",
                        std::max(deficient, kUnknowns - m));
  out.condition = sv(0) / sv(sv.size() - 1);
  Eigen::VectorXd x = svd.solve(b);
  const Eigen::VectorXd defect = M * x - b;
  out.residual = defect.cwiseAbs().maxCoeff();
  std::vector<Real> v(kUnknowns);
  for (int u = 0; u < kUnknowns; ++u) v[u] = x(u) * colscale(u);
  out.consts = unflatten(v);
  return out;
}

DiffOp casimir_operator(const AlgebraConstants& c, AlgebraOperators& ops) {
  OperatorPowers& h = ops.powers();
  const DiffOp& A = ops.A();
  const DiffOp& B = ops.B();
  const DiffOp& C = ops.C();
  const DiffOp& A2 = ops.A2();
  const DiffOp& B2 = ops.B2();
  const Real al = c.alpha, be = c.beta, ga = c.gamma, a = c.a;

  DiffOp K = C * C;
  if (al != 0) K -= al * (A2 * B + B * A2);
  if (ga != 0) K -= ga * (A * B2 + B2 * A);
  K += poly_times(PolyInH(al * ga + a * be / 3) - c.delta, h, ops.AB_anti());
  if (be != 0) K -= (2 * be / 3) * (B * B2);
  K += poly_times(PolyInH(ga * ga - al * be / 3) - c.epsilon, h, B2);
  K += poly_times(ga * c.delta - 2 * c.zeta - (be / 3) * c.d, h, B);
  if (a != 0) K += (2 * a / 3) * (A * A2);
  K += poly_times(c.d + PolyInH(a * ga / 3 + al * al), h, A2);
  K += poly_times((a / 3) * c.epsilon + al * c.delta + 2 * c.z, h, A);
  return K;
}

CubicFit fit_polynomial_in_H(const DiffOp& K, AlgebraOperators& ops, std::span<const Point> points,
                             const ParamEnv& env) {
  OperatorPowers& h = ops.powers();
  const DiffOp* list[] = {&h.power(0), &h.power(1), &h.power(2), &h.power(3), &K};
  std::vector<std::array<Real, 4>> rows;
  std::vector<Real> rhs;
  for (const Point& p : points) {
    const auto s = sample_at(list, p, env);
    std::vector<MultiIndex> indices;
    for (const auto& smp : s)
      for (const auto& [idx, v] : smp) indices.push_back(idx);
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    for (MultiIndex idx : indices) {
      std::array<Real, 4> row{};
      for (int k = 0; k < 4; ++k) {
        auto it = s[k].find(idx);
        row[k] = it == s[k].end() ? 0.0 : it->second;
      }
      auto it = s[4].find(idx);
      rows.push_back(row);
      rhs.push_back(it == s[4].end() ? 0.0 : it->second);
    }
  }
  const int m = static_cast<int>(rows.size());
  Eigen::MatrixXd M(m, 4);
  Eigen::VectorXd b(m);
  for (int r = 0; r < m; ++r) {
    Real scale = std::max<Real>(1, std::abs(rhs[r]));
    for (int k = 0; k < 4; ++k) scale = std::max(scale, std::abs(rows[r][k]));
    for (int k = 0; k < 4; ++k) M(r, k) = rows[r][k] / scale;
    b(r) = rhs[r] / scale;
  }
  Eigen::Vector4d colscale;
  for (int k = 0; k < 4; ++k) {
    const Real n = M.col(k).norm();
    colscale(k) = n > 0 ? 1.0 / n : 1.0;
    M.col(k) *= colscale(k);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd x = svd.solve(b);
  CubicFit out;
  out.residual = (M * x - b).cwiseAbs().maxCoeff();
  std::vector<Real> c(4);
  for (int k = 0; k < 4; ++k) c[k] = x(k) * colscale(k);
  out.poly = PolyInH(c);
  return out;
}

// ---------------------------------------------------------------------------
// hbar grading

const GradedEntry* GradingReport::find(std::string_view name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

GradedEntry grade(std::string name, std::span<const Real> hbars, std::span<const Real> values) {
  if (hbars.size() != values.size() || hbars.size() < kMinGradingSamples)
    throw std::invalid_argument("grading needs at least five hbar samples");
  GradedEntry e;
  e.name = std::move(name);
  e.samples.assign(values.begin(), values.end());
  const int n = static_cast<int>(hbars.size());
  Eigen::MatrixXd M(n, 4);
  Eigen::VectorXd b(n);
  for (int r = 0; r < n; ++r) {
    const Real h2 = hbars[r] * hbars[r];
    M(r, 0) = 1;
    M(r, 1) = h2;
    M(r, 2) = h2 * h2;
    M(r, 3) = h2 * h2 * h2;
    b(r) = values[r];
  }
  const Eigen::VectorXd x = M.colPivHouseholderQr().solve(b);
  e.c0 = x(0);
  e.c2 = x(1);
  e.c4 = x(2);
  e.c6 = x(3);
  const Real scale = std::max<Real>(1, b.cwiseAbs().maxCoeff());
  e.odd_residual = (M * x - b).cwiseAbs().maxCoeff() / scale;
  return e;
}

GradingReport hbar_grading(ClassTag tag, const ParamEnv& env_base, std::span<const Real> hbars,
                           std::span<const Point> points) {
  GradingReport rep;
  rep.tag = tag;
  rep.hbars.assign(hbars.begin(), hbars.end());
  const auto& names = constant_names();
  std::vector<std::vector<Real>> values(names.size() + 4);
  for (Real hb : hbars) {
    ParamEnv env = env_base;
    env.hbar = hb;
    SuperSystem sys = build_class(tag, env);
    AlgebraOperators ops(sys.H(), sys.A(), sys.B);
    const FitResult fit = fit_constants(ops, points, env);
    const auto flat = flatten(fit.consts);
    for (std::size_t k = 0; k < flat.size(); ++k) values[k].push_back(flat[k]);
    const DiffOp K = casimir_operator(fit.consts, ops);
    const CubicFit kfit = fit_polynomial_in_H(K, ops, points, env);
    for (int k = 0; k < 4; ++k) values[names.size() + k].push_back(kfit.poly.coeff(k));
  }
  for (std::size_t k = 0; k < names.size(); ++k) rep.entries.push_back(grade(names[k], hbars, values[k]));
  for (int k = 0; k < 4; ++k)
    rep.entries.push_back(grade("K" + std::to_string(k), hbars, values[names.size() + k]));
  return rep;
}

}  // namespace qsint
