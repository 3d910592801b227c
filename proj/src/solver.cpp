#include "qsint/solver.hpp"

#include <Eigen/Dense>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace qsint {

namespace {

ScalarField P(Param p) { return ScalarField::param(p); }

Real sample_q(const ScalarField& q, Real x, const ParamEnv& env) {
  return value(q, Point{x, 0.0}, env);
}

}  // namespace

std::pair<SeparatedODE, SeparatedODE> separate(const IntegrableSystem& sys, const ParamEnv& env,
                                               Real E, Interval u_box, Interval v_box) {
  if (sys.kind != SystemKind::Liouville)
    throw std::invalid_argument("separation needs a Liouville system");
  env.validate();
  const ScalarField e(E);
  SeparatedODE u{Side::U, 4.0 * sys.f - 4.0 * sys.F * e, env.hbar, u_box};
  SeparatedODE v{Side::V, 4.0 * sys.g - 4.0 * sys.G * e, env.hbar, v_box};
  return {u, v};
}

SturmResult sturm_spectrum(const SeparatedODE& ode, const ParamEnv& env, int grid_n, int count,
                           bool want_vectors) {
  if (grid_n < 64) throw std::invalid_argument("grid_n must be at least 64");
  if (count < 1 || count > grid_n) throw std::invalid_argument("bad eigenvalue count");
  const Real a = ode.interval.a, b = ode.interval.b;
  if (!(b > a)) throw std::invalid_argument("empty interval");
  const Real h = (b - a) / (grid_n + 1);
  const Real k = 4 * ode.hbar * ode.hbar / (h * h);

  SturmResult out;
  out.grid.resize(grid_n);
  std::vector<double> d(grid_n), e(grid_n, -k);
  for (int i = 0; i < grid_n; ++i) {
    const Real x = a + (i + 1) * h;
    out.grid[i] = x;
    Real q = 0;
    try {
      q = sample_q(ode.q, x, env);
    } catch (const DomainError& err) {
      std::string what = err.what();
      if (const auto cut = what.rfind(" (argument"); cut != std::string::npos) what.resize(cut);
      throw DomainError(std::string(ode.side == Side::U ? "u" : "v") +
                            " interval crosses a singularity of the separated potential: " + what,
                        x);
    }
    if (!std::isfinite(q)) throw DomainError("potential term is not finite on the interval", x);
    d[i] = 2 * k + q;
  }

  lapack_int found = 0;
  std::vector<double> w(grid_n);
  std::vector<double> z(want_vectors ? static_cast<std::size_t>(grid_n) * count : 1);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(count));
  const lapack_int info =
      LAPACKE_dstevr(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'I', grid_n, d.data(), e.data(),
                     0.0, 0.0, 1, count, 0.0, &found, w.data(), z.data(), grid_n, support.data());
  if (info != 0 || found != count)
    throw SolverError("tridiagonal eigensolver failed (info " + std::to_string(info) + ")");
  out.values.assign(w.begin(), w.begin() + count);
  if (want_vectors) {
    for (int c = 0; c < count; ++c) {
      std::vector<Real> vec(z.begin() + static_cast<std::ptrdiff_t>(c) * grid_n,
                            z.begin() + static_cast<std::ptrdiff_t>(c + 1) * grid_n);
      std::size_t imax = 0;
      for (std::size_t i = 1; i < vec.size(); ++i)
        if (std::abs(vec[i]) > std::abs(vec[imax])) imax = i;
      const Real s = 1.0 / vec[imax];
      for (Real& x : vec) x *= s;
      out.vectors.push_back(std::move(vec));
    }
  }
  return out;
}

JointResult joint_spectrum(const IntegrableSystem& sys, const ParamEnv& env,
                           std::span<const std::pair<int, int>> branches, const JointOptions& opt) {
  JointResult out;
  if (branches.empty() || !(opt.e_range.b > opt.e_range.a)) return out;
  int mmax = 0, nmax = 0;
  for (auto [m, n] : branches) {
    if (m < 0 || n < 0) throw std::invalid_argument("negative branch index");
    mmax = std::max(mmax, m);
    nmax = std::max(nmax, n);
  }
  auto spectra = [&](Real E) {
    auto [u, v] = separate(sys, env, E, opt.u_box, opt.v_box);
    return std::pair{sturm_spectrum(u, env, opt.grid_n, mmax + 1).values,
                     sturm_spectrum(v, env, opt.grid_n, nmax + 1).values};
  };

  const int scan = std::max(opt.scan_points, 2);
  std::vector<Real> es(scan);
  std::vector<std::pair<std::vector<Real>, std::vector<Real>>> at(scan);
  for (int s = 0; s < scan; ++s) {
    es[s] = opt.e_range.a + (opt.e_range.b - opt.e_range.a) * s / (scan - 1);
    at[s] = spectra(es[s]);
  }

  for (auto [m, n] : branches) {
    auto gap = [&](const std::pair<std::vector<Real>, std::vector<Real>>& sp) {
      return sp.first[m] + sp.second[n];
    };
    int bracket = -1;
    for (int s = 0; s + 1 < scan; ++s) {
      const Real g0 = gap(at[s]), g1 = gap(at[s + 1]);
      if (g0 == 0 || (g0 < 0) != (g1 < 0)) {
        bracket = s;
        break;
      }
    }
    if (bracket < 0) {
      out.unbracketed.emplace_back(m, n);
      continue;
    }
    Real lo = es[bracket], hi = es[bracket + 1];
    Real glo = gap(at[bracket]);
    auto mid_sp = at[bracket];
    if (glo != 0) {
      while (hi - lo > opt.tol) {
        const Real mid = 0.5 * (lo + hi);
        mid_sp = spectra(mid);
        const Real gm = gap(mid_sp);
        if (gm == 0) {
          lo = hi = mid;
          break;
        }
        if ((gm < 0) == (glo < 0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
    } else {
      hi = lo;
    }
    const Real E = 0.5 * (lo + hi);
    const auto sp = spectra(E);
    out.pairs.push_back({m, n, E, sp.first[m]});
  }
  return out;
}

UVOperators uv_operators(const IntegrableSystem& sys) {
  if (sys.kind != SystemKind::Liouville)
    throw std::invalid_argument("(u, v) operators need a Liouville system");
  const ScalarField h2 = pow(P(Param::Hbar), 2);
  const ScalarField v = ScalarField::eta();
  const ScalarField F = sys.F, G = sys.G.at(v), f = sys.f, g = sys.g.at(v);
  const ScalarField W = F + G;
  UVOperators ops;
  ops.H = DiffOp::term(-h2 / W, 2, 0) + DiffOp::term(-h2 / W, 0, 2) +
          DiffOp::multiplication((f + g) / W);
  ops.A = DiffOp::term(-4.0 * h2 * G / W, 2, 0) + DiffOp::term(4.0 * h2 * F / W, 0, 2) +
          DiffOp::multiplication(4.0 * (G * f - F * g) / W);
  return ops;
}

namespace {

using Spline = boost::math::interpolators::cardinal_cubic_b_spline<Real>;

std::shared_ptr<Spline> make_spline(const SturmResult& r, int idx, Interval box) {
  if (idx < 0 || idx >= static_cast<int>(r.vectors.size()))
    throw std::invalid_argument("eigenvector index out of range");
  std::vector<Real> y;
  y.reserve(r.vectors[idx].size() + 2);
  y.push_back(0);
  y.insert(y.end(), r.vectors[idx].begin(), r.vectors[idx].end());
  y.push_back(0);
  const Real h = (box.b - box.a) / static_cast<Real>(y.size() - 1);
  return std::make_shared<Spline>(y.begin(), y.end(), box.a, h);
}

}  // namespace

WaveFunction product_wavefunction(const SturmResult& u, int m, Interval u_box, const SturmResult& v,
                                  int n, Interval v_box) {
  auto su = make_spline(u, m, u_box);
  auto sv = make_spline(v, n, v_box);
  return [su, sv](Point p, int order) {
    const int o = std::min(order, 2);
    const Real U[3] = {(*su)(p.xi), su->prime(p.xi), su->double_prime(p.xi)};
    const Real V[3] = {(*sv)(p.eta), sv->prime(p.eta), sv->double_prime(p.eta)};
    const Real inv_fact[3] = {1, 1, 0.5};
    Jet2 j(o, p);
    for (int d = 0; d <= o; ++d)
      for (int i = 0; i <= d; ++i)
        j.coeff(i, d - i) = U[i] * inv_fact[i] * V[d - i] * inv_fact[d - i];
    return j;
  };
}

Residuals residual(const DiffOp& H, const DiffOp& A, const WaveFunction& psi, Real E, Real J,
                   std::span<const Point> points, const ParamEnv& env) {
  Residuals r;
  for (const Point& p : points) {
    const Real v = psi(p, 0).value();
    const Real scale = std::max<Real>(1, std::abs(v));
    r.h_res = std::max(r.h_res, std::abs(op_apply(H, psi, p, env) - E * v) / scale);
    r.a_res = std::max(r.a_res, std::abs(op_apply(A, psi, p, env) - J * v) / scale);
  }
  return r;
}

// ---------------------------------------------------------------------------

namespace {

// Fourth-order second-difference matrix, Dirichlet (zero) outside.
Eigen::MatrixXd second_difference4(int n, Real h) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  const Real c = 1.0 / (12 * h * h);
  const Real st[5] = {-1, 16, -30, 16, -1};
  for (int i = 0; i < n; ++i)
    for (int o = -2; o <= 2; ++o)
      if (i + o >= 0 && i + o < n) D(i, i + o) = st[o + 2] * c;
  return D;
}

}  // namespace

std::vector<std::pair<Real, Real>> dense_oracle(const IntegrableSystem& sys, const ParamEnv& env,
                                                const OracleOptions& opt) {
  if (sys.kind != SystemKind::Liouville) throw std::invalid_argument("oracle needs a Liouville system");
  const int n = opt.grid;
  const Real hu = (opt.u_box.b - opt.u_box.a) / (n + 1);
  const Real hv = (opt.v_box.b - opt.v_box.a) / (n + 1);
  const Real h2 = env.hbar * env.hbar;
  std::vector<Real> uf(n), uF(n), vg(n), vG(n);
  for (int i = 0; i < n; ++i) {
    const Real u = opt.u_box.a + (i + 1) * hu, v = opt.v_box.a + (i + 1) * hv;
    uf[i] = sample_q(sys.f, u, env);
    uF[i] = sample_q(sys.F, u, env);
    vg[i] = sample_q(sys.g, v, env);
    vG[i] = sample_q(sys.G, v, env);
  }
  Eigen::MatrixXd Lu = -h2 * second_difference4(n, hu);
  Eigen::MatrixXd Lv = -h2 * second_difference4(n, hv);
  for (int i = 0; i < n; ++i) Lu(i, i) += uf[i], Lv(i, i) += vg[i];

  const int N = n * n;
  auto at = [n](int i, int j) { return i * n + j; };
  std::vector<Real> wsq(N);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Real w = uF[i] + vG[j];
      if (!(w > 0)) throw DomainError("metric weight not positive in the oracle box", w);
      wsq[at(i, j)] = 1.0 / std::sqrt(w);
    }

  std::vector<double> M(static_cast<std::size_t>(N) * N, 0.0);
  auto Mref = [&](int r, int c) -> double& { return M[static_cast<std::size_t>(c) * N + r]; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int r = at(i, j);
      for (int i2 = std::max(0, i - 2); i2 <= std::min(n - 1, i + 2); ++i2)
        Mref(r, at(i2, j)) += Lu(i, i2) * wsq[r] * wsq[at(i2, j)];
      for (int j2 = std::max(0, j - 2); j2 <= std::min(n - 1, j + 2); ++j2)
        Mref(r, at(i, j2)) += Lv(j, j2) * wsq[r] * wsq[at(i, j2)];
    }

  const int count = std::min(opt.count, N);
  lapack_int found = 0;
  std::vector<double> w(N), z(static_cast<std::size_t>(N) * count);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(count));
  const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', N, M.data(), N, 0, 0, 1,
                                         count, 0.0, &found, w.data(), z.data(), N, support.data());
  if (info != 0 || found != count) throw SolverError("dense eigensolver failed");

  // Symmetrized integral W^{-1/2} (4 G Lu - 4 F Lv) W^{-1/2} applied to a vector.
  auto apply_I = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(N);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const int r = at(i, j);
        Real acc = 0;
        for (int i2 = std::max(0, i - 2); i2 <= std::min(n - 1, i + 2); ++i2)
          acc += 4 * vG[j] * Lu(i, i2) * wsq[at(i2, j)] * y(at(i2, j));
        for (int j2 = std::max(0, j - 2); j2 <= std::min(n - 1, j + 2); ++j2)
          acc -= 4 * uF[i] * Lv(j, j2) * wsq[at(i, j2)] * y(at(i, j2));
        out(r) = wsq[r] * acc;
      }
    return out;
  };

  std::vector<std::pair<Real, Real>> pairs;
  int start = 0;
  while (start < count) {
    int end = start + 1;
    while (end < count && std::abs(w[end] - w[start]) < 1e-6 * std::max<Real>(1, std::abs(w[start])))
      ++end;
    const int k = end - start;
    Eigen::MatrixXd Q(N, k);
    for (int c = 0; c < k; ++c)
      for (int r = 0; r < N; ++r) Q(r, c) = z[static_cast<std::size_t>(start + c) * N + r];
    Eigen::MatrixXd S(k, k);
    for (int c = 0; c < k; ++c) S.col(c) = Q.transpose() * apply_I(Q.col(c));
    S = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    for (int c = 0; c < k; ++c) pairs.emplace_back(w[start + c], es.eigenvalues()(c));
    start = end;
  }
  return pairs;
}

// ---------------------------------------------------------------------------

std::pair<Real, Real> pi_offset_range(const IntegrableSystem& sys, const ParamEnv& env, Real E,
                                      Interval eta_box, int samples) {
  const ScalarField off = 2.0 * (E * sys.int_F - sys.int_f);
  Real lo = std::numeric_limits<Real>::infinity(), hi = -lo;
  for (int s = 0; s < samples; ++s) {
    const Real eta = eta_box.a + (eta_box.b - eta_box.a) * s / (samples - 1);
    const Real v = value(off, Point{0.0, eta}, env);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

WKBSolution wkb_build(const IntegrableSystem& sys, const ParamEnv& env, Real E, Real J,
                      std::pair<Real, Real> weights, Interval eta_box, Real quad_tol) {
  if (sys.kind != SystemKind::Lie) throw std::invalid_argument("WKB solutions need a Lie system");
  env.validate();
  const auto [lo, hi] = pi_offset_range(sys, env, E, eta_box);
  WKBSolution s;
  s.weights = weights;
  if (J + lo > 0) {
    s.branch = Branch::Oscillatory;
  } else if (J + hi < 0) {
    s.branch = Branch::Exponential;
  } else {
    throw DomainError("Pi changes sign or vanishes on the eta interval", J + lo);
  }
  const ScalarField xi = ScalarField::xi();
  const ScalarField hbar = P(Param::Hbar);
  const ScalarField e(E);
  s.Pi = J + 2.0 * (e * sys.int_F - sys.int_f);
  const bool osc = s.branch == Branch::Oscillatory;
  s.p = sqrt(osc ? s.Pi : -s.Pi);
  const Real p0 = value(s.p, Point{0.0, eta_box.a}, env);
  s.amplitude = p0 / s.p;
  const ScalarField integrand = osc ? (e * sys.G - sys.g) / (hbar * s.p)
                                    : (sys.g - e * sys.G) / (hbar * s.p);
  s.phase = ScalarField::antiderivative(integrand, ScalarField(eta_box.a), quad_tol);
  const ScalarField theta = xi * s.p / hbar + s.phase;
  const auto [w1, w2] = weights;
  if (osc) {
    s.re = (w1 + w2) * s.amplitude * cos(theta);
    s.im = (w1 - w2) * s.amplitude * sin(theta);
  } else {
    s.re = w1 * s.amplitude * exp(theta) + w2 * s.amplitude * exp(-theta);
    s.im = ScalarField();
  }
  return s;
}

Real lie_is_residual(const ScalarField& psi, const ScalarField& Pi, std::span<const Point> points,
                     const ParamEnv& env) {
  Real worst = 0;
  for (const Point& p : points) {
    FieldEvaluator ev(env, p);
    const std::pair<ScalarField, int> req[] = {{psi, 2}, {Pi, 0}};
    const auto j = ev.eval(req);
    const Real v = j[0].value();
    const Real r = -env.hbar * env.hbar * j[0].partial(2, 0) - j[1].value() * v;
    worst = std::max(worst, std::abs(r) / std::max<Real>(1, std::abs(v)));
  }
  return worst;
}

}  // namespace qsint
