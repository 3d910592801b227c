#pragma once

// Eigenproblems of integrable systems.
//
// Liouville systems separate in the isothermic coordinates (u, v):
//   -4 hbar^2 U'' + (4 f(u) - 4 F(u) E) U =  J U
//   -4 hbar^2 V'' + (4 g(v) - 4 G(v) E) V = -J V
// Lie systems admit closed WKB-type solutions built from
//   Pi(eta) = J + 2 (E int F - int f),   p = sqrt|Pi|.

#include <optional>
#include <utility>
#include <vector>

#include "qsint/systems.hpp"

namespace qsint {

struct Interval {
  Real a = 0;
  Real b = 1;
};

enum class Side { U, V };

/// -4 hbar^2 W'' + q(x) W = lambda W with Dirichlet ends; q is a field of xi.
struct SeparatedODE {
  Side side = Side::U;
  ScalarField q;
  Real hbar = 1;
  Interval interval;
};

/// Rejects Lie systems and hbar <= 0.
std::pair<SeparatedODE, SeparatedODE> separate(const IntegrableSystem& sys, const ParamEnv& env,
                                               Real E, Interval u_box, Interval v_box);

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SturmResult {
  std::vector<Real> values;
  std::vector<std::vector<Real>> vectors;  // interior samples, max |.| = 1 and positive near a
  std::vector<Real> grid;                  // interior abscissae
};

/// Lowest `count` eigenvalues (and optionally eigenvectors) of the
/// second-order finite-difference discretization with grid_n interior points.
SturmResult sturm_spectrum(const SeparatedODE& ode, const ParamEnv& env, int grid_n, int count,
                           bool vectors = false);

struct JointPair {
  int m = 0;
  int n = 0;
  Real E = 0;
  Real J = 0;
};

struct JointOptions {
  Interval u_box{-6, 6};
  Interval v_box{-6, 6};
  Interval e_range{0, 10};
  int grid_n = 2000;
  int scan_points = 50;
  Real tol = 1e-10;
};

struct JointResult {
  std::vector<JointPair> pairs;
  std::vector<std::pair<int, int>> unbracketed;  // branches without a sign change
};

/// Roots of J_m(E) + Jt_n(E) = 0 for each requested (m, n).
JointResult joint_spectrum(const IntegrableSystem& sys, const ParamEnv& env,
                           std::span<const std::pair<int, int>> branches, const JointOptions& opt);

/// H and the first integral written in (u, v); the DiffOp slots (xi, eta)
/// stand for (u, v).
struct UVOperators {
  DiffOp H;
  DiffOp A;
};
UVOperators uv_operators(const IntegrableSystem& sys);

/// U(u) V(v) with both factors interpolated by cubic B-splines through the
/// discrete eigenvectors (zero Dirichlet values appended at the ends).
WaveFunction product_wavefunction(const SturmResult& u, int m, Interval u_box, const SturmResult& v,
                                  int n, Interval v_box);

struct Residuals {
  Real h_res = 0;
  Real a_res = 0;
};

/// max |(P psi - lambda psi)| / max(1, |psi|) for (H, E) and (A, J).
Residuals residual(const DiffOp& H, const DiffOp& A, const WaveFunction& psi, Real E, Real J,
                   std::span<const Point> points, const ParamEnv& env);

// ---------------------------------------------------------------------------
// Dense two-dimensional oracle

struct OracleOptions {
  Interval u_box{-5, 5};
  Interval v_box{-5, 5};
  int grid = 60;  // interior points per axis
  int count = 6;
};

/// Lowest eigenpairs (E, J) of the (u, v) problem by a fourth-order
/// finite-difference discretization of both operators. J is resolved inside
/// degenerate energy clusters.
std::vector<std::pair<Real, Real>> dense_oracle(const IntegrableSystem& sys, const ParamEnv& env,
                                                const OracleOptions& opt);

// ---------------------------------------------------------------------------
// WKB-type solutions of Lie systems

enum class Branch { Oscillatory, Exponential };

struct WKBSolution {
  Branch branch = Branch::Oscillatory;
  ScalarField Pi, p;
  ScalarField phase;      // int (E G - g)/(hbar p) for the oscillatory branch, int (g - E G)/(hbar p) otherwise
  ScalarField amplitude;  // p(eta0) / p(eta)
  // Oscillatory: psi = w1 A e^{i theta} + w2 B e^{-i theta}, theta = xi p / hbar + phase,
  // split into real and imaginary components. Exponential: psi = w1 a e^{+chi} + w2 b e^{-chi}, real.
  ScalarField re, im;
  std::pair<Real, Real> weights{1, 0};
};

/// Builds the solution for E, J on the eta interval. Throws DomainError if Pi
/// changes sign or vanishes on the interval (checked on a fine grid).
WKBSolution wkb_build(const IntegrableSystem& sys, const ParamEnv& env, Real E, Real J,
                      std::pair<Real, Real> weights, Interval eta_box, Real quad_tol = 1e-13);

/// -hbar^2 psi_xixi - Pi psi, relative to max(1, |psi|).
Real lie_is_residual(const ScalarField& psi, const ScalarField& Pi, std::span<const Point> points,
                     const ParamEnv& env);

/// min and max of 2 (E int F - int f) over a grid of eta values.
std::pair<Real, Real> pi_offset_range(const IntegrableSystem& sys, const ParamEnv& env, Real E,
                                      Interval eta_box, int samples = 201);

}  // namespace qsint
