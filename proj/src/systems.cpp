#include "qsint/systems.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qsint {

namespace {

const ScalarField kXi = ScalarField::xi();
const ScalarField kEta = ScalarField::eta();

ScalarField P(Param p) { return ScalarField::param(p); }
ScalarField hbar2() { return pow(P(Param::Hbar), 2); }

// The standard mixing step of splitmix64.
std::uint64_t splitmix(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Classes I1 and I2 share the shape of F, G (and f, g) up to the u^2 weight.
struct Quartet {
  ScalarField F, G, f, g;
};

Quartet class_I1(const ScalarField& u) {
  const ScalarField half(0.5);
  return {4.0 * P(Param::Lambda) * pow(u, 2) + P(Param::Kappa) * u + P(Param::Nu) * half,
          -P(Param::Lambda) * pow(u, 2) + P(Param::Mu) / pow(u, 2) + P(Param::Nu) * half,
          4.0 * P(Param::L) * pow(u, 2) + P(Param::K) * u + P(Param::N) * half,
          -P(Param::L) * pow(u, 2) + P(Param::M) / pow(u, 2) + P(Param::N) * half};
}

ScalarField i1_tilde(Param six, Param four, Param two, Param inv, const ScalarField& u, Real sign) {
  return ScalarField(sign) * (P(six) * pow(u, 6) / 256.0 + P(four) * pow(u, 4) / 128.0 +
                              P(two) * pow(u, 2) / 16.0 - P(inv) / pow(u, 2));
}

ScalarField i3_shape(Param c2, Param c1, const ScalarField& u) {
  const ScalarField e2 = exp(2.0 * u);
  const ScalarField den = pow(e2 - 1.0, 2);
  return P(c2) * e2 / den + P(c1) * exp(u) * (1.0 + e2) / den;
}

ScalarField i3_tilde(const ScalarField& tan_coeff, const ScalarField& cot_coeff,
                     const ScalarField& constant, const ScalarField& u) {
  return tan_coeff / 4.0 * pow(tan(u), 2) + cot_coeff / 4.0 * pow(cot(u), 2) + constant / 2.0;
}

ScalarField ii2_tilde_u(Param c4, Param c3, Param c2, Param c1, const ScalarField& u) {
  return P(c4) * pow(u, 4) / 128.0 + P(c3) * pow(u, 3) / 16.0 + P(c2) * pow(u, 2) / 16.0 +
         P(c1) * u / 4.0;
}

ScalarField ii2_tilde_v(Param c4, Param c3, Param c2, Param c1, const ScalarField& v) {
  return -P(c4) * pow(v, 4) / 128.0 + P(c3) * pow(v, 3) / 16.0 + P(c1) * v / 4.0 -
         P(c2) * pow(v, 2) / 16.0;
}

}  // namespace

const char* to_string(ClassTag tag) {
  switch (tag) {
    case ClassTag::I1: return "I1";
    case ClassTag::I2: return "I2";
    case ClassTag::I3: return "I3";
    case ClassTag::II1: return "II1";
    case ClassTag::II2: return "II2";
    case ClassTag::II3: return "II3";
  }
  return "?";
}

std::optional<ClassTag> parse_class(std::string_view name) {
  for (ClassTag t : kAllClasses)
    if (name == to_string(t)) return t;
  return std::nullopt;
}

bool is_liouville_class(ClassTag tag) {
  return tag == ClassTag::I1 || tag == ClassTag::I2 || tag == ClassTag::I3;
}

TableRow table_row(ClassTag tag) {
  switch (tag) {
    case ClassTag::I1: return {0, 0, 6, "xi", "eta"};
    case ClassTag::I2: return {-8, 0, 0, "xi^2", "eta^2"};
    case ClassTag::I3: return {32, -8, 0, "(e^xi+e^-xi)^2", "(e^eta+e^-eta)^2"};
    case ClassTag::II1: return {0, 0, 0, "1", "0"};
    case ClassTag::II2: return {0, 0, 6, "xi", "0"};
    case ClassTag::II3: return {-8, 0, 0, "xi^2", "0"};
  }
  throw std::invalid_argument("unknown class tag");
}

CatalogFields catalog_fields(ClassTag tag) {
  CatalogFields c;
  const ScalarField& u = kXi;  // univariate variable of class I / tilde functions
  switch (tag) {
    case ClassTag::I1: {
      auto q = class_I1(u);
      c.F = q.F, c.G = q.G, c.f = q.f, c.g = q.g;
      c.Ft = i1_tilde(Param::Lambda, Param::Kappa, Param::Nu, Param::Mu, u, 1);
      c.Gt = i1_tilde(Param::Lambda, Param::Kappa, Param::Nu, Param::Mu, u, -1);
      c.ft = i1_tilde(Param::L, Param::K, Param::N, Param::M, u, 1);
      c.gt = i1_tilde(Param::L, Param::K, Param::N, Param::M, u, -1);
      c.xmap = 2.0 * sqrt(kXi);
      c.ymap = 2.0 * sqrt(kEta);
      c.a_fn = kXi;
      c.b_fn = kEta;
      break;
    }
    case ClassTag::I2: {
      const ScalarField half(0.5);
      c.F = P(Param::Lambda) * pow(u, 2) + P(Param::Kappa) / pow(u, 2) + P(Param::Nu) * half;
      c.G = -P(Param::Lambda) * pow(u, 2) + P(Param::Mu) / pow(u, 2) + P(Param::Nu) * half;
      c.f = P(Param::L) * pow(u, 2) + P(Param::K) / pow(u, 2) + P(Param::N) * half;
      c.g = -P(Param::L) * pow(u, 2) + P(Param::M) / pow(u, 2) + P(Param::N) * half;
      const ScalarField eu = exp(u);
      c.Ft = 4.0 * P(Param::Lambda) * exp(2.0 * u) + P(Param::Nu) * eu;
      c.Gt = P(Param::Kappa) * eu / pow(1.0 + eu, 2) + P(Param::Mu) * eu / pow(eu - 1.0, 2);
      c.ft = 4.0 * P(Param::L) * exp(2.0 * u) + P(Param::N) * eu;
      c.gt = P(Param::K) * eu / pow(1.0 + eu, 2) + P(Param::M) * eu / pow(eu - 1.0, 2);
      c.xmap = log(kXi);
      c.ymap = log(kEta);
      c.a_fn = pow(kXi, 2);
      c.b_fn = pow(kEta, 2);
      break;
    }
    case ClassTag::I3: {
      c.F = i3_shape(Param::Kappa, Param::Lambda, u);
      c.G = i3_shape(Param::Mu, Param::Nu, u);
      c.f = i3_shape(Param::K, Param::L, u);
      c.g = i3_shape(Param::M, Param::N, u);
      const auto kap = P(Param::Kappa), lam = P(Param::Lambda), mu = P(Param::Mu),
                 nu = P(Param::Nu);
      const auto k = P(Param::K), l = P(Param::L), m = P(Param::M), n = P(Param::N);
      c.Ft = i3_tilde(kap + 2.0 * lam, 2.0 * nu - mu, lam + nu, u);
      c.Gt = i3_tilde(2.0 * lam - kap, mu + 2.0 * nu, lam + nu, u);
      c.ft = i3_tilde(k + 2.0 * l, 2.0 * n - m, l + n, u);
      c.gt = i3_tilde(2.0 * l - k, m + 2.0 * n, l + n, u);
      c.xmap = atan(exp(kXi));
      c.ymap = atan(exp(kEta));
      c.a_fn = pow(exp(kXi) + exp(-kXi), 2);
      c.b_fn = pow(exp(kEta) + exp(-kEta), 2);
      break;
    }
    case ClassTag::II1: {
      const ScalarField& e = kEta;
      c.F = P(Param::Kappa) * e + P(Param::Lambda);
      c.G = P(Param::Mu) * e + P(Param::Nu);
      c.f = P(Param::K) * e + P(Param::L);
      c.g = P(Param::M) * e + P(Param::N);
      c.int_F = P(Param::Kappa) * pow(e, 2) / 2.0 + P(Param::Lambda) * e;
      c.int_f = P(Param::K) * pow(e, 2) / 2.0 + P(Param::L) * e;
      c.Ft = P(Param::Kappa) * pow(u, 2) / 4.0 + (P(Param::Lambda) + P(Param::Mu)) * u / 2.0 +
             P(Param::Nu) / 2.0;
      c.Gt = -P(Param::Kappa) * pow(u, 2) / 4.0 + (P(Param::Lambda) - P(Param::Mu)) * u / 2.0 +
             P(Param::Nu) / 2.0;
      c.ft = P(Param::K) * pow(u, 2) / 4.0 + (P(Param::L) + P(Param::M)) * u / 2.0 +
             P(Param::N) / 2.0;
      c.gt = -P(Param::K) * pow(u, 2) / 4.0 + (P(Param::L) - P(Param::M)) * u / 2.0 +
             P(Param::N) / 2.0;
      c.xmap = kXi;
      c.ymap = kEta;
      c.a_fn = ScalarField(1.0);
      c.b_fn = ScalarField(1.0);
      break;
    }
    case ClassTag::II2: {
      const ScalarField& e = kEta;
      const ScalarField se = sqrt(e);
      c.F = P(Param::Kappa) / se + P(Param::Lambda);
      c.G = 3.0 * P(Param::Kappa) * se + P(Param::Lambda) * e + P(Param::Mu) / se + P(Param::Nu);
      c.f = P(Param::K) / se + P(Param::L);
      c.g = 3.0 * P(Param::K) * se + P(Param::L) * e + P(Param::M) / se + P(Param::N);
      c.int_F = 2.0 * P(Param::Kappa) * se + P(Param::Lambda) * e;
      c.int_f = 2.0 * P(Param::K) * se + P(Param::L) * e;
      c.Ft = ii2_tilde_u(Param::Lambda, Param::Kappa, Param::Nu, Param::Mu, u);
      c.Gt = ii2_tilde_v(Param::Lambda, Param::Kappa, Param::Nu, Param::Mu, u);
      c.ft = ii2_tilde_u(Param::L, Param::K, Param::N, Param::M, u);
      c.gt = ii2_tilde_v(Param::L, Param::K, Param::N, Param::M, u);
      c.xmap = 2.0 * sqrt(kXi);
      c.ymap = 2.0 * sqrt(kEta);
      c.a_fn = kXi;
      c.b_fn = kEta;
      break;
    }
    case ClassTag::II3: {
      const ScalarField& e = kEta;
      c.F = P(Param::Lambda) * e + P(Param::Kappa) / pow(e, 3);
      c.G = P(Param::Nu) + P(Param::Mu) / pow(e, 2);
      c.f = P(Param::L) * e + P(Param::K) / pow(e, 3);
      c.g = P(Param::N) + P(Param::M) / pow(e, 2);
      c.int_F = P(Param::Lambda) * pow(e, 2) / 2.0 - P(Param::Kappa) / (2.0 * pow(e, 2));
      c.int_f = P(Param::L) * pow(e, 2) / 2.0 - P(Param::K) / (2.0 * pow(e, 2));
      const ScalarField eu = exp(u);
      c.Ft = P(Param::Lambda) * exp(2.0 * u) + P(Param::Nu) * eu;
      c.Gt = P(Param::Kappa) * exp(2.0 * u) + P(Param::Mu) * eu;
      c.ft = P(Param::L) * exp(2.0 * u) + P(Param::N) * eu;
      c.gt = P(Param::K) * exp(2.0 * u) + P(Param::M) * eu;
      c.xmap = log(kXi);
      c.ymap = log(kEta);
      c.a_fn = pow(kXi, 2);
      c.b_fn = pow(kEta, 2);
      break;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Domains and sampling

bool SafeDomain::contains(Point p) const {
  return p.xi >= xi_lo && p.xi <= xi_hi && p.eta >= eta_lo && p.eta <= eta_hi &&
         std::abs(p.xi - p.eta) >= min_abs_diff && p.xi + p.eta >= min_sum;
}

SeededUniform::SeededUniform(std::uint64_t seed) : state_(seed) {}

Real SeededUniform::next(Real lo, Real hi) {
  const std::uint64_t bits = splitmix(state_) >> 11;
  const Real unit = static_cast<Real>(bits) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

std::vector<Point> SafeDomain::sample(std::uint64_t seed, int count) const {
  SeededUniform rng(seed);
  std::vector<Point> pts;
  int attempts = 0;
  while (static_cast<int>(pts.size()) < count) {
    if (++attempts > 1000 * std::max(count, 1))
      throw std::runtime_error("safe domain too small to sample");
    Point p{rng.next(xi_lo, xi_hi), rng.next(eta_lo, eta_hi)};
    if (contains(p)) pts.push_back(p);
  }
  return pts;
}

SafeDomain safe_domain(ClassTag tag) {
  SafeDomain d;
  switch (tag) {
    case ClassTag::I1:
      d.min_abs_diff = 0.2;
      d.excluded = "xi = eta (1/v^2 pole of G)";
      break;
    case ClassTag::I2:
      d.min_abs_diff = 0.2;
      d.min_sum = 0.5;
      d.excluded = "xi = eta (1/v^2 pole), xi + eta near 0 (1/u^2 pole)";
      break;
    case ClassTag::I3:
      d.xi_lo = d.eta_lo = 0.3;
      d.xi_hi = d.eta_hi = 1.2;
      d.min_abs_diff = 0.2;
      d.excluded = "xi = eta and xi + eta = 0 (e^{2w} = 1 poles), tan/cot poles of the tilde functions";
      break;
    case ClassTag::II1:
      d.excluded = "none inside the box";
      break;
    case ClassTag::II2:
      d.excluded = "eta <= 0 (sqrt branch)";
      break;
    case ClassTag::II3:
      d.excluded = "eta = 0 (1/eta^3 pole), xi <= 0 (ln branch)";
      break;
  }
  return d;
}

ParamEnv random_params(std::uint64_t seed, Real hbar) {
  SeededUniform rng(seed ^ 0x5eedULL);
  ParamEnv env;
  for (Param p : kPotentialParams) env.set(p, rng.next(0.5, 2.0));
  env.hbar = hbar;
  return env;
}

// ---------------------------------------------------------------------------
// Constructors

namespace {

void probe_metric(const ScalarField& metric, const std::optional<MetricProbe>& probe) {
  if (!probe) return;
  for (const Point& p : probe->domain.sample(probe->seed, probe->samples)) {
    const Real g = value(metric, p, probe->env);
    if (!(std::abs(g) > 1e-12) || !std::isfinite(g))
      throw DegenerateMetric("metric vanishes at (" + std::to_string(p.xi) + ", " +
                             std::to_string(p.eta) + ")");
  }
}

DiffOp hamiltonian(const ScalarField& metric, const ScalarField& potential) {
  return DiffOp::term(-hbar2() / metric, 1, 1) + DiffOp::multiplication(potential);
}

}  // namespace

DiffOp liouville_integral(const ScalarField& F_u, const ScalarField& G_v, const ScalarField& f_u,
                          const ScalarField& g_v) {
  const ScalarField h2 = hbar2();
  const ScalarField sum = F_u + G_v;
  return DiffOp::term(-h2, 2, 0) + DiffOp::term(-h2, 0, 2) +
         DiffOp::term(2.0 * h2 * (F_u - G_v) / sum, 1, 1) +
         DiffOp::multiplication(4.0 * (f_u * G_v - g_v * F_u) / sum);
}

IntegrableSystem build_liouville(const ScalarField& F, const ScalarField& G, const ScalarField& f,
                                 const ScalarField& g, const std::optional<MetricProbe>& probe) {
  const ScalarField u = kXi + kEta;
  const ScalarField v = kXi - kEta;
  const ScalarField Fu = F.at(u), Gv = G.at(v), fu = f.at(u), gv = g.at(v);
  IntegrableSystem s;
  s.kind = SystemKind::Liouville;
  s.F = F, s.G = G, s.f = f, s.g = g;
  s.metric = Fu + Gv;
  probe_metric(s.metric, probe);
  s.potential = (fu + gv) / s.metric;
  s.beta = Fu - Gv;
  s.q = 4.0 * (fu * Gv - gv * Fu) / s.metric;
  s.H = hamiltonian(s.metric, s.potential);
  s.A = liouville_integral(Fu, Gv, fu, gv);
  return s;
}

IntegrableSystem build_lie(const ScalarField& F, const ScalarField& G, const ScalarField& f,
                           const ScalarField& g, const std::optional<ScalarField>& int_F,
                           const std::optional<ScalarField>& int_f,
                           const std::optional<MetricProbe>& probe, Real quad_tol) {
  for (const ScalarField* fld : {&F, &G, &f, &g})
    if (fld->depends_on_xi()) throw std::invalid_argument("Lie generating functions depend on eta only");
  const ScalarField eta0 = P(Param::Eta0);
  IntegrableSystem s;
  s.kind = SystemKind::Lie;
  s.F = F, s.G = G, s.f = f, s.g = g;
  s.int_F = int_F ? *int_F : ScalarField::antiderivative(F, eta0, quad_tol);
  s.int_f = int_f ? *int_f : ScalarField::antiderivative(f, eta0, quad_tol);
  s.metric = F * kXi + G;
  probe_metric(s.metric, probe);
  const ScalarField w = f * kXi + g;
  s.potential = w / s.metric;
  s.beta = s.int_F;
  s.q = -2.0 * s.potential * s.int_F + 2.0 * s.int_f;
  s.H = hamiltonian(s.metric, s.potential);
  const ScalarField h2 = hbar2();
  s.A = DiffOp::term(-h2, 2, 0) + DiffOp::term(2.0 * h2 * s.beta / s.metric, 1, 1) +
        DiffOp::multiplication(s.q);
  return s;
}

DiffOp second_integral_xy(const CatalogFields& c) {
  const ScalarField u = kXi + kEta;
  const ScalarField v = kXi - kEta;
  return liouville_integral(c.Ft.at(u), c.Gt.at(v), c.ft.at(u), c.gt.at(v));
}

SuperSystem build_class(ClassTag tag, const ParamEnv& env, const ClassOptions& options) {
  env.validate();
  SuperSystem s;
  s.tag = tag;
  s.env = env;
  s.fields = catalog_fields(tag);
  s.domain = safe_domain(tag);
  CatalogFields& c = s.fields;
  if (options.perturb_f != 0)
    c.f = c.f + options.perturb_f * pow(is_liouville_class(tag) ? kXi : kEta, 3);

  MetricProbe probe{s.domain, env, 16, 0x9a11ULL};
  if (is_liouville_class(tag)) {
    s.base = build_liouville(c.F, c.G, c.f, c.g, probe);
  } else {
    if (options.perturb_f != 0)
      c.int_f = c.int_f + options.perturb_f * pow(kEta, 4) / 4.0;
    s.base = build_lie(c.F, c.G, c.f, c.g, c.int_F, c.int_f, probe);
  }
  s.B = pullback(second_integral_xy(c), c.xmap, c.ymap);
  return s;
}

// ---------------------------------------------------------------------------
// Structure equations

StructureResiduals check_structure_equations(const SuperSystem& sys,
                                             std::span<const Point> points) {
  const CatalogFields& c = sys.fields;
  const bool liouville = is_liouville_class(sys.tag);
  const ScalarField u = kXi + kEta, v = kXi - kEta;
  // Metric / potential generators evaluated in the (xi, eta) frame.
  const ScalarField Fx = liouville ? c.F.at(u) : c.F;
  const ScalarField Gx = liouville ? c.G.at(v) : c.G;
  const ScalarField fx = liouville ? c.f.at(u) : c.f;
  const ScalarField gx = liouville ? c.g.at(v) : c.g;

  StructureResiduals r;
  auto rel = [](Real residual, std::initializer_list<Real> terms) {
    Real scale = 1;
    for (Real t : terms) scale = std::max(scale, std::abs(t));
    return std::abs(residual) / scale;
  };

  for (const Point& p : points) {
    FieldEvaluator ev(sys.env, p);
    const std::pair<ScalarField, int> req[] = {
        {sys.base.metric, 2}, {sys.base.potential, 2}, {c.a_fn, 2}, {c.b_fn, 2},
        {Fx, 2},              {Gx, 2},                 {fx, 2},     {gx, 2}};
    const auto j = ev.eval(req);
    const Jet2 &g = j[0], &V = j[1], &Aj = j[2], &Bj = j[3];
    const Real A = Aj.value(), A1 = Aj.partial(1, 0), A2 = Aj.partial(2, 0);
    const Real B = Bj.value(), B1 = Bj.partial(0, 1), B2 = Bj.partial(0, 2);
    const Real g0 = g.value(), gx1 = g.partial(1, 0), gy1 = g.partial(0, 1);
    const Real gxx = g.partial(2, 0), gyy = g.partial(0, 2);
    const Real Vx = V.partial(1, 0), Vy = V.partial(0, 1), Vxx = V.partial(2, 0),
               Vyy = V.partial(0, 2);

    {
      const Real t1 = g0 * (A2 - B2), t2 = -3 * B1 * gy1, t3 = -2 * B * gyy, t4 = 3 * A1 * gx1,
                 t5 = 2 * A * gxx;
      r.metric_residual =
          std::max(r.metric_residual, rel(t1 + t2 + t3 + t4 + t5, {t1, t2, t3, t4, t5}));
    }
    {
      const Real t1 = g0 * 3 * B1 * Vy, t2 = g0 * 2 * B * Vyy, t3 = -g0 * 3 * A1 * Vx,
                 t4 = -g0 * 2 * A * Vxx, t5 = 4 * B * gy1 * Vy, t6 = -4 * A * gx1 * Vx;
      r.potential_residual = std::max(
          r.potential_residual, rel(t1 + t2 + t3 + t4 + t5 + t6, {t1, t2, t3, t4, t5, t6}));
    }
    // Specialized forms; the same operator acts on (F, G) and on (f, g).
    auto specialized = [&](const Jet2& Fj, const Jet2& Gj) {
      Real t1, t2, t3, t4;
      if (liouville) {
        const Real Fs = Fj.value() + Gj.value();
        const Real d1p = Fj.partial(1, 0) + Gj.partial(1, 0);
        const Real d1m = Fj.partial(1, 0) - Gj.partial(1, 0);
        const Real d2p = Fj.partial(2, 0) + Gj.partial(2, 0);
        t1 = (A2 - B2) * Fs, t2 = 3 * A1 * d1p, t3 = -3 * B1 * d1m, t4 = 2 * (A - B) * d2p;
      } else {
        const Real x = p.xi;
        t1 = (A2 - B2) * (Fj.value() * x + Gj.value());
        t2 = 3 * A1 * Fj.value();
        t3 = -3 * B1 * (Fj.partial(0, 1) * x + Gj.partial(0, 1));
        t4 = -2 * B * (Fj.partial(0, 2) * x + Gj.partial(0, 2));
      }
      return rel(t1 + t2 + t3 + t4, {t1, t2, t3, t4});
    };
    r.diff_beta = std::max(r.diff_beta, specialized(j[4], j[5]));
    r.diff_q = std::max(r.diff_q, specialized(j[6], j[7]));
  }
  return r;
}

Real top_symbol_residual(ClassTag tag, Real hbar, std::span<const Point> points, Real alpha_sign) {
  const TableRow row = table_row(tag);
  const CatalogFields c = catalog_fields(tag);
  const Real h2 = hbar * hbar;
  const Real alpha = row.alpha * h2, gamma = row.gamma * h2, a = row.a * h2;
  ParamEnv env;
  env.hbar = hbar;
  Real worst = 0;
  for (const Point& p : points) {
    for (int axis = 0; axis < 2; ++axis) {
      const Jet2 j = eval(axis == 0 ? c.a_fn : c.b_fn, p, 1, env);
      const Real f = j.value(), d = axis == 0 ? j.partial(1, 0) : j.partial(0, 1);
      const Real t1 = 6 * h2 * d * d, t2 = -a, t3 = 3 * gamma * f * f, t4 = alpha_sign * 3 * alpha * f;
      Real scale = std::max({Real(1), std::abs(t1), std::abs(t2), std::abs(t3), std::abs(t4)});
      worst = std::max(worst, std::abs(t1 + t2 + t3 + t4) / scale);
    }
  }
  return worst;
}

}  // namespace qsint
