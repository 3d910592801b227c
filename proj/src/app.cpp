#include "qsint/app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "qsint/algebra.hpp"

namespace qsint {

using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Deterministic JSON output

void write_number(std::string& out, double v) {
  if (!std::isfinite(v)) {
    out += "null";
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void write_json(std::string& out, const json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case json::value_t::number_float: write_number(out, j.get<double>()); return;
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += inner + json(it.key()).dump() + ": ";
        write_json(out, it.value(), indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += inner;
        write_json(out, j[i], indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    default: out += j.dump(); return;
  }
}

std::string to_json_text(const json& j) {
  std::string out;
  write_json(out, j, 0);
  out += "\n";
  return out;
}

std::string scalar_text(const json& j) {
  if (j.is_number_float()) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", j.get<double>());
    return buf;
  }
  if (j.is_string()) return j.get<std::string>();
  return j.dump();
}

// plain text: checks as one line each, everything else as key: value
void write_text(std::ostringstream& os, const json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = j.is_object() ? it.key() : "-";
    const json& v = it.value();
    if (v.is_object() && v.contains("pass") && v.contains("value")) {
      os << pad << (v["pass"].get<bool>() ? "PASS " : (v.value("ledger", false) ? "LEDG " : "FAIL "))
         << v["name"].get<std::string>() << " = " << scalar_text(v["value"]) << " ("
         << (v["relation"] == "below" ? "< " : "> ") << scalar_text(v["tolerance"]) << ")";
      if (v.contains("note") && !v["pass"].get<bool>()) os << "  " << v["note"].get<std::string>();
      os << "\n";
    } else if (v.is_structured() && v.empty()) {
      os << pad << key << (v.is_array() ? ": []\n" : ": {}\n");
    } else if (v.is_array() &&
               std::none_of(v.begin(), v.end(), [](const json& e) { return e.is_structured(); })) {
      os << pad << key << ": [";
      for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << scalar_text(v[i]);
      os << "]\n";
    } else if (v.is_structured()) {
      os << pad << key << ":\n";
      write_text(os, v, indent + 1);
    } else {
      os << pad << key << ": " << scalar_text(v) << "\n";
    }
  }
}

// ---------------------------------------------------------------------------
// Checks

struct Checks {
  json list = json::array();
  bool failed = false;

  void below(const std::string& name, Real value, Real tol, bool ledger = false,
             const std::string& note = {}) {
    add(name, value, tol, "below", std::isfinite(value) && value < tol, ledger, note);
  }
  void above(const std::string& name, Real value, Real bound, const std::string& note = {}) {
    add(name, value, bound, "above", std::isfinite(value) && value > bound, false, note);
  }

 private:
  void add(const std::string& name, Real value, Real tol, const char* rel, bool pass, bool ledger,
           const std::string& note) {
    json c;
    c["name"] = name;
    c["value"] = value;
    c["tolerance"] = tol;
    c["relation"] = rel;
    c["pass"] = pass;
    if (ledger) c["ledger"] = true;
    if (!note.empty()) c["note"] = note;
    list.push_back(std::move(c));
    if (!pass && !ledger) failed = true;
  }
};

// a spectrum run that lost branches; carries what was computed
class BracketFailure : public std::runtime_error {
 public:
  BracketFailure(json partial, const std::string& what)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const json& partial() const { return partial_; }

 private:
  json partial_;
};

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t draw_seed(std::uint64_t seed, int draw) {
  return mix(seed * 0x100000001b3ULL + static_cast<std::uint64_t>(draw));
}
std::uint64_t point_seed(std::uint64_t seed, int draw) { return mix(draw_seed(seed, draw) ^ 0x70u); }

json real_array(std::span<const Real> v) {
  json a = json::array();
  for (Real x : v) a.push_back(x);
  return a;
}

json env_json(const ParamEnv& env) {
  json p;
  for (Param q : kPotentialParams) p[param_name(q)] = env.get(q);
  p["hbar"] = env.hbar;
  p["eta0"] = env.eta0;
  return p;
}

Real tol_or(const RunConfig& cfg, Real fallback) { return cfg.tol ? *cfg.tol : fallback; }

void guard_order(const RunConfig& cfg, const DiffOp& op, const char* what) {
  if (op.order() > cfg.jet_order) {
    std::ostringstream os;
    os << what << " has order " << op.order() << ", above jet_order " << cfg.jet_order;
    throw ConfigError(os.str());
  }
}

ClassTag require_catalog(const RunConfig& cfg, const char* command) {
  auto tag = parse_class(cfg.cls);
  if (!tag) throw ConfigError(std::string(command) + " needs a catalog class (I1..II3)");
  return *tag;
}

bool typo_covers(ClassTag tag, const std::string& constant_name) {
  for (const TypoCorrection& t : known_typos())
    if (t.tag == tag && t.constant != "K" && constant_name.rfind(t.constant, 0) == 0) return true;
  return false;
}

bool casimir_typo(ClassTag tag) {
  for (const TypoCorrection& t : known_typos())
    if (t.tag == tag && t.constant == "K") return true;
  return false;
}

json typo_json(std::optional<ClassTag> only) {
  json a = json::array();
  for (const TypoCorrection& t : known_typos()) {
    if (only && t.tag != *only) continue;
    a.push_back({{"class", to_string(t.tag)},
                 {"constant", t.constant},
                 {"printed", t.printed},
                 {"corrected", t.corrected}});
  }
  return a;
}

Real rel_diff(Real x, Real ref) { return std::abs(x - ref) / std::max<Real>(1, std::abs(ref)); }

// ---------------------------------------------------------------------------
// Commands

json cmd_verify(const RunConfig& cfg, Checks& checks) {
  json runs = json::array();
  for (int draw = 0; draw < cfg.draws; ++draw) {
    for (Real hbar : cfg.hbar) {
      ResolvedSystem rs = resolve_system(cfg, draw, hbar);
      const ParamEnv& env = rs.env;
      const auto pts = rs.domain.sample(point_seed(cfg.seed, draw), cfg.samples);
      Checks local;
      guard_order(cfg, commutator(rs.base.H, rs.base.A), "[H,A]");
      const Real ha = commutator_residual(rs.base.H, rs.base.A, pts, env);
      if (!rs.tag) {
        const bool lie = rs.base.kind == SystemKind::Lie;
        local.below("[H,A]", ha, tol_or(cfg, lie ? 1e-7 : 1e-8));
      } else {
        const ClassTag tag = *rs.tag;
        local.below("[H,A]", ha, tol_or(cfg, 1e-8));
        guard_order(cfg, commutator(rs.base.H, *rs.B), "[H,B]");
        local.below("[H,B]", commutator_residual(rs.base.H, *rs.B, pts, env), tol_or(cfg, 1e-8));

        const SuperSystem sys = build_class(tag, env);
        const StructureResiduals sr = check_structure_equations(sys, pts);
        const Real st = tol_or(cfg, 1e-9);
        local.below("structure.metric", sr.metric_residual, st);
        local.below("structure.potential", sr.potential_residual, st);
        local.below("structure.metric_specialized", sr.diff_beta, st);
        local.below("structure.potential_specialized", sr.diff_q, st);
        ClassOptions perturbed;
        perturbed.perturb_f = 0.5;
        const StructureResiduals pr =
            check_structure_equations(build_class(tag, env, perturbed), pts);
        local.above("structure.control_perturbed_f",
                    std::max(pr.potential_residual, pr.diff_q), 1e-3);

        local.below("top_symbol.table_form", top_symbol_residual(tag, hbar, pts, +1.0), st);
        local.below("top_symbol.printed_form", top_symbol_residual(tag, hbar, pts, -1.0), st,
                    true, "printed sign of the alpha term disagrees with the table");

        AlgebraOperators ops(sys.H(), sys.A(), sys.B);
        const Real rt = tol_or(cfg, 1e-7);
        const AlgebraConstants pc = printed_constants(tag, env);
        const RelationResiduals rp = relation_residuals(ops, pc, pts, env);
        bool ledgered = false;
        for (const TypoCorrection& t : known_typos())
          if (t.tag == tag && t.constant != "K") ledgered = true;
        local.below("relations.printed.r1", rp.r1, rt, ledgered,
                    ledgered ? "printed constants carry a known misprint" : "");
        local.below("relations.printed.r2", rp.r2, rt, ledgered,
                    ledgered ? "printed constants carry a known misprint" : "");
        const RelationResiduals rc = relation_residuals(ops, corrected_constants(tag, env), pts, env);
        local.below("relations.corrected.r1", rc.r1, rt);
        local.below("relations.corrected.r2", rc.r2, rt);

        const FitResult fit = fit_constants(ops, pts, env);
        local.below("fit.residual", fit.residual, tol_or(cfg, 1e-8));
        const DiffOp K = casimir_operator(fit.consts, ops);
        const Real ct = tol_or(cfg, 1e-6);
        const Real kscale = max_coeff(K, pts, env);
        for (auto [name, other] : {std::pair<const char*, const DiffOp*>{"casimir.[K,A]", &ops.A()},
                                   {"casimir.[K,B]", &ops.B()},
                                   {"casimir.[K,C]", &ops.C()}}) {
          guard_order(cfg, commutator(K, *other), name);
          local.below(name, commutator_residual(K, *other, pts, env), ct);
        }
        const PolyInH kc = corrected_casimir(tag, env);
        const DiffOp kdiff = K - poly_in_H(kc.padded(4), ops.powers());
        local.below("casimir.closed_form.corrected", relative_max_coeff(kdiff, pts, env, kscale), ct);
        const PolyInH kp = printed_casimir(tag, env);
        const DiffOp kpdiff = K - poly_in_H(kp.padded(4), ops.powers());
        const bool kl = casimir_typo(tag);
        local.below("casimir.closed_form.printed", relative_max_coeff(kpdiff, pts, env, kscale), ct,
                    kl, kl ? "printed closed form carries a known misprint" : "");
      }
      json run;
      run["draw"] = draw;
      run["hbar"] = hbar;
      run["params"] = env_json(env);
      run["points"] = static_cast<int>(pts.size());
      run["checks"] = local.list;
      runs.push_back(std::move(run));
      checks.failed = checks.failed || local.failed;
    }
  }
  json out;
  out["runs"] = runs;
  if (auto tag = parse_class(cfg.cls)) out["typo_ledger"] = typo_json(*tag);
  return out;
}

json constants_table(ClassTag tag, const ParamEnv& env, const AlgebraConstants& fitted,
                     Checks& checks, Real tol) {
  const auto f = flatten(fitted);
  const auto p = flatten(printed_constants(tag, env));
  const auto c = flatten(corrected_constants(tag, env));
  const auto& names = constant_names();
  json rows = json::array();
  Real worst_corr = 0, worst_printed = 0;
  for (std::size_t k = 0; k < names.size(); ++k) {
    json r;
    r["name"] = names[k];
    r["fitted"] = f[k];
    r["printed"] = p[k];
    r["corrected"] = c[k];
    r["delta_printed"] = f[k] - p[k];
    const bool ledger = typo_covers(tag, names[k]);
    if (ledger) r["ledger"] = true;
    rows.push_back(std::move(r));
    worst_corr = std::max(worst_corr, rel_diff(f[k], c[k]));
    if (!ledger) worst_printed = std::max(worst_printed, rel_diff(f[k], p[k]));
  }
  const TableRow row = table_row(tag);
  const Real h2 = env.hbar * env.hbar;
  const Real table_err = std::max({rel_diff(fitted.alpha, row.alpha * h2),
                                   rel_diff(fitted.gamma, row.gamma * h2),
                                   rel_diff(fitted.a, row.a * h2)});
  checks.below("constants.table_alpha_gamma_a", table_err, tol);
  checks.below("constants.printed_outside_ledger", worst_printed, tol);
  checks.below("constants.corrected", worst_corr, tol);
  return rows;
}

json cmd_fit(const RunConfig& cfg, Checks& checks) {
  const ClassTag tag = require_catalog(cfg, "fit");
  json per = json::array();
  ParamEnv base;
  for (Real hbar : cfg.hbar) {
    ResolvedSystem rs = resolve_system(cfg, 0, hbar);
    base = rs.env;
    const auto pts = rs.domain.sample(point_seed(cfg.seed, 0), cfg.samples);
    AlgebraOperators ops(rs.base.H, rs.base.A, *rs.B);
    Checks local;
    const FitResult fit = fit_constants(ops, pts, rs.env);
    local.below("fit.residual", fit.residual, tol_or(cfg, 1e-8));
    json entry;
    entry["hbar"] = hbar;
    entry["params"] = env_json(rs.env);
    entry["rows"] = fit.rows;
    entry["condition"] = fit.condition;
    entry["singular_values"] = real_array(fit.singular_values);
    entry["constants"] = constants_table(tag, rs.env, fit.consts, local, tol_or(cfg, 1e-6));
    entry["checks"] = local.list;
    checks.failed = checks.failed || local.failed;
    per.push_back(std::move(entry));
  }
  json out;
  out["fits"] = per;
  if (cfg.hbar.size() >= kMinGradingSamples) {
    const ResolvedSystem rs = resolve_system(cfg, 0, cfg.hbar.front());
    const auto pts = rs.domain.sample(point_seed(cfg.seed, 0), cfg.samples);
    const GradingReport g = hbar_grading(tag, base, cfg.hbar, pts);
    json entries = json::array();
    Real worst_odd = 0;
    for (const GradedEntry& e : g.entries) {
      entries.push_back({{"name", e.name},
                         {"samples", real_array(e.samples)},
                         {"c0", e.c0},
                         {"c2", e.c2},
                         {"c4", e.c4},
                         {"c6", e.c6},
                         {"odd_residual", e.odd_residual}});
      worst_odd = std::max(worst_odd, e.odd_residual);
    }
    out["grading"] = {{"hbar", real_array(cfg.hbar)}, {"entries", entries}};
    Checks gc;
    gc.below("grading.odd_residual", worst_odd, tol_or(cfg, 1e-9));
    out["grading_checks"] = gc.list;
    checks.failed = checks.failed || gc.failed;
  } else if (cfg.hbar.size() > 1) {
    out["grading"] = {{"skipped", "grading needs at least five hbar values"}};
  }
  out["typo_ledger"] = typo_json(tag);
  return out;
}

json poly_json(const PolyInH& p) { return real_array(p.padded(4)); }

json cmd_casimir(const RunConfig& cfg, Checks& checks) {
  const ClassTag tag = require_catalog(cfg, "casimir");
  json per = json::array();
  for (Real hbar : cfg.hbar) {
    ResolvedSystem rs = resolve_system(cfg, 0, hbar);
    const ParamEnv& env = rs.env;
    const auto pts = rs.domain.sample(point_seed(cfg.seed, 0), cfg.samples);
    AlgebraOperators ops(rs.base.H, rs.base.A, *rs.B);
    Checks local;
    const FitResult fit = fit_constants(ops, pts, env);
    const DiffOp K = casimir_operator(fit.consts, ops);
    const Real ct = tol_or(cfg, 1e-6);
    for (auto [name, other] : {std::pair<const char*, const DiffOp*>{"[K,A]", &ops.A()},
                               {"[K,B]", &ops.B()},
                               {"[K,C]", &ops.C()}}) {
      guard_order(cfg, commutator(K, *other), name);
      local.below(name, commutator_residual(K, *other, pts, env), ct);
    }
    const CubicFit cubic = fit_polynomial_in_H(K, ops, pts, env);
    local.below("cubic_fit.residual", cubic.residual, ct);
    const PolyInH kc = corrected_casimir(tag, env);
    const PolyInH kp = printed_casimir(tag, env);
    Real dc = 0, dp = 0;
    for (int k = 0; k < 4; ++k) {
      dc = std::max(dc, rel_diff(cubic.poly.coeff(k), kc.coeff(k)));
      dp = std::max(dp, rel_diff(cubic.poly.coeff(k), kp.coeff(k)));
    }
    local.below("closed_form.corrected", dc, ct);
    const bool kl = casimir_typo(tag);
    local.below("closed_form.printed", dp, ct, kl,
                kl ? "printed closed form carries a known misprint" : "");
    json entry;
    entry["hbar"] = hbar;
    entry["params"] = env_json(env);
    entry["K_fitted"] = poly_json(cubic.poly);
    entry["K_printed"] = poly_json(kp);
    entry["K_corrected"] = poly_json(kc);
    entry["checks"] = local.list;
    checks.failed = checks.failed || local.failed;
    per.push_back(std::move(entry));
  }
  json out;
  out["casimir"] = per;
  out["typo_ledger"] = typo_json(tag);
  return out;
}

json cmd_spectrum(const RunConfig& cfg, Checks& checks) {
  json per = json::array();
  for (Real hbar : cfg.hbar) {
    ResolvedSystem rs = resolve_system(cfg, 0, hbar);
    if (rs.base.kind != SystemKind::Liouville)
      throw ConfigError("spectrum needs a Liouville system (class I or general liouville)");
    const ParamEnv& env = rs.env;
    JointOptions opt;
    opt.u_box = cfg.u_box;
    opt.v_box = cfg.v_box;
    opt.e_range = cfg.e_range;
    opt.grid_n = cfg.grid_n;
    const JointResult jr = joint_spectrum(rs.base, env, cfg.branches, opt);

    JointOptions wide = opt;
    wide.u_box = {2 * opt.u_box.a, 2 * opt.u_box.b};
    wide.v_box = {2 * opt.v_box.a, 2 * opt.v_box.b};
    wide.grid_n = 2 * opt.grid_n + 1;
    const JointResult jw = joint_spectrum(rs.base, env, cfg.branches, wide);

    const UVOperators uv = uv_operators(rs.base);
    // 30 x 30 grid over the middle half of the box, where the Dirichlet walls do not bite
    constexpr int kResGrid = 30;
    std::vector<Point> pts;
    const Real uc = 0.5 * (opt.u_box.a + opt.u_box.b), uh = 0.25 * (opt.u_box.b - opt.u_box.a);
    const Real vc = 0.5 * (opt.v_box.a + opt.v_box.b), vh = 0.25 * (opt.v_box.b - opt.v_box.a);
    for (int i = 0; i < kResGrid; ++i)
      for (int j = 0; j < kResGrid; ++j)
        pts.push_back({uc + uh * (2.0 * i / (kResGrid - 1) - 1), vc + vh * (2.0 * j / (kResGrid - 1) - 1)});

    Checks local;
    json pairs = json::array();
    for (const JointPair& p : jr.pairs) {
      auto [uo, vo] = separate(rs.base, env, p.E, opt.u_box, opt.v_box);
      const SturmResult us = sturm_spectrum(uo, env, opt.grid_n, p.m + 1, true);
      const SturmResult vs = sturm_spectrum(vo, env, opt.grid_n, p.n + 1, true);
      const WaveFunction psi = product_wavefunction(us, p.m, opt.u_box, vs, p.n, opt.v_box);
      const Residuals r = residual(uv.H, uv.A, psi, p.E, p.J, pts, env);
      Real shift = std::numeric_limits<Real>::quiet_NaN();
      for (const JointPair& q : jw.pairs)
        if (q.m == p.m && q.n == p.n) shift = std::abs(q.E - p.E);
      pairs.push_back({{"m", p.m},
                       {"n", p.n},
                       {"E", p.E},
                       {"J", p.J},
                       {"h_res", r.h_res},
                       {"a_res", r.a_res},
                       {"box_doubling_dE", shift}});
      const std::string tag = "(" + std::to_string(p.m) + "," + std::to_string(p.n) + ")";
      local.below("h_res" + tag, r.h_res, tol_or(cfg, 1e-4));
      local.below("a_res" + tag, r.a_res, tol_or(cfg, 1e-4));
    }
    json entry;
    entry["hbar"] = hbar;
    entry["params"] = env_json(env);
    entry["pairs"] = pairs;
    json unb = json::array();
    for (auto [m, n] : jr.unbracketed) unb.push_back({m, n});
    entry["unbracketed"] = unb;

    if (cfg.oracle) {
      OracleOptions oo;
      const auto oracle = dense_oracle(rs.base, env, oo);
      json oj = json::array();
      for (auto [E, J] : oracle) oj.push_back({{"E", E}, {"J", J}});
      entry["oracle"] = oj;
      Real worst = 0;
      for (const JointPair& p : jr.pairs) {
        Real best = std::numeric_limits<Real>::infinity();
        for (auto [E, J] : oracle)
          best = std::min(best, std::max(std::abs(E - p.E), std::abs(J - p.J)));
        if (p.E <= oracle.back().first) worst = std::max(worst, best);
      }
      local.below("oracle.max_deviation", worst, tol_or(cfg, 1e-3));
    }
    entry["checks"] = local.list;
    checks.failed = checks.failed || local.failed;
    per.push_back(std::move(entry));
    if (!jr.unbracketed.empty()) {
      std::ostringstream os;
      os << "no sign change of J_m + Jt_n on the energy range for " << jr.unbracketed.size()
         << " branch(es)";
      json partial;
      partial["spectra"] = per;
      throw BracketFailure(partial, os.str());
    }
  }
  json out;
  out["spectra"] = per;
  return out;
}

json cmd_wkb(const RunConfig& cfg, Checks& checks) {
  json per = json::array();
  for (Real hbar : cfg.hbar) {
    ResolvedSystem rs = resolve_system(cfg, 0, hbar);
    if (rs.base.kind != SystemKind::Lie)
      throw ConfigError("wkb needs a Lie system (class II or general lie)");
    const ParamEnv& env = rs.env;
    const Real E = cfg.energy;
    const auto [lo, hi] = pi_offset_range(rs.base, env, E, cfg.interval);
    std::vector<Real> js;
    if (cfg.separation) {
      js.push_back(*cfg.separation);
    } else {
      js.push_back(1.0 - lo);
      js.push_back(-1.0 - hi);
    }
    // grid over the xi range of the domain and the eta interval
    std::vector<Point> pts;
    const int n = cfg.samples;
    const int cols = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<Real>(n)))));
    for (int i = 0; i < n; ++i) {
      const Real s = cols > 1 ? static_cast<Real>(i % cols) / (cols - 1) : 0.5;
      const Real t = n > 1 ? static_cast<Real>(i) / (n - 1) : 0.5;
      pts.push_back({rs.domain.xi_lo + s * (rs.domain.xi_hi - rs.domain.xi_lo),
                     cfg.interval.a + t * (cfg.interval.b - cfg.interval.a)});
    }
    json sols = json::array();
    Checks local;
    for (Real J : js) {
      const WKBSolution w = wkb_build(rs.base, env, E, J, cfg.weights, cfg.interval);
      Real se = 0, ae = 0, is = 0, neg = 0;
      for (const ScalarField* f : {&w.re, &w.im}) {
        if (f->is_zero()) continue;
        const WaveFunction psi = as_wavefunction(*f, env);
        const Residuals r = residual(rs.base.H, rs.base.A, psi, E, J, pts, env);
        const Residuals rn = residual(rs.base.H, rs.base.A, psi, E + 0.1, J, pts, env);
        se = std::max(se, r.h_res);
        ae = std::max(ae, r.a_res);
        neg = std::max(neg, rn.h_res);
        is = std::max(is, lie_is_residual(*f, w.Pi, pts, env));
      }
      const char* br = w.branch == Branch::Oscillatory ? "oscillatory" : "exponential";
      sols.push_back({{"branch", br},
                      {"E", E},
                      {"J", J},
                      {"schrodinger_residual", se},
                      {"integral_residual", ae},
                      {"reduced_residual", is},
                      {"control_residual", neg}});
      const std::string b(br);
      local.below(b + ".schrodinger", se, tol_or(cfg, 1e-8));
      local.below(b + ".integral", ae, tol_or(cfg, 1e-8));
      local.below(b + ".reduced", is, tol_or(cfg, 1e-10));
      local.above(b + ".control_E_plus_0.1", neg, 1e-2);
    }
    json entry;
    entry["hbar"] = hbar;
    entry["params"] = env_json(env);
    entry["pi_offset_range"] = {lo, hi};
    entry["solutions"] = sols;
    entry["checks"] = local.list;
    checks.failed = checks.failed || local.failed;
    per.push_back(std::move(entry));
  }
  json out;
  out["wkb"] = per;
  return out;
}

json cmd_catalog() {
  json classes = json::array();
  for (ClassTag tag : kAllClasses) {
    const TableRow row = table_row(tag);
    const CatalogFields cf = catalog_fields(tag);
    const SafeDomain d = safe_domain(tag);
    json c;
    c["class"] = to_string(tag);
    c["kind"] = is_liouville_class(tag) ? "liouville" : "lie";
    c["table"] = {{"alpha_over_hbar2", row.alpha},
                  {"gamma_over_hbar2", row.gamma},
                  {"a_over_hbar2", row.a},
                  {"A", row.a_fn},
                  {"B", row.b_fn}};
    json fields;
    fields["F"] = cf.F.to_string();
    fields["G"] = cf.G.to_string();
    fields["f"] = cf.f.to_string();
    fields["g"] = cf.g.to_string();
    fields["F~"] = cf.Ft.to_string();
    fields["G~"] = cf.Gt.to_string();
    fields["f~"] = cf.ft.to_string();
    fields["g~"] = cf.gt.to_string();
    fields["X"] = cf.xmap.to_string();
    fields["Y"] = cf.ymap.to_string();
    if (!is_liouville_class(tag)) {
      fields["int_F"] = cf.int_F.to_string();
      fields["int_f"] = cf.int_f.to_string();
    }
    c["fields"] = fields;
    c["safe_domain"] = {{"xi", {d.xi_lo, d.xi_hi}},
                        {"eta", {d.eta_lo, d.eta_hi}},
                        {"min_abs_diff", d.min_abs_diff},
                        {"excluded", d.excluded}};
    if (d.min_sum > -1e299) c["safe_domain"]["min_sum"] = d.min_sum;
    classes.push_back(std::move(c));
  }
  json out;
  out["classes"] = classes;
  out["typo_ledger"] = typo_json(std::nullopt);
  return out;
}

// ---------------------------------------------------------------------------
// Config parsing helpers

Interval parse_interval(const json& j, const char* key) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw ConfigError(std::string(key) + ": expected a:b");
    try {
      return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
    } catch (const std::exception&) {
      throw ConfigError(std::string(key) + ": expected a:b");
    }
  }
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<Real>(), j[1].get<Real>()};
  throw ConfigError(std::string(key) + ": expected [a, b] or \"a:b\"");
}

Real num(const json& j, const char* key) {
  if (!j.is_number()) throw ConfigError(std::string(key) + ": expected a number");
  return j.get<Real>();
}

int integer(const json& j, const char* key, int lo, int hi) {
  if (!j.is_number_integer()) throw ConfigError(std::string(key) + ": expected an integer");
  const auto v = j.get<long long>();
  if (v < lo || v > hi) {
    std::ostringstream os;
    os << key << ": must be in [" << lo << ", " << hi << "]";
    throw ConfigError(os.str());
  }
  return static_cast<int>(v);
}

}  // namespace

// ---------------------------------------------------------------------------

ScalarField parse_field_spec(std::string_view spec, const ScalarField& var) {
  std::string s(spec);
  std::vector<Real> coeffs;
  auto parse_list = [&](const std::string& list) {
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        coeffs.push_back(std::stod(item, &used));
        if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw ConfigError("bad coefficient '" + item + "' in field '" + s + "'");
      }
    }
  };
  if (s.rfind("poly:", 0) == 0) {
    parse_list(s.substr(5));
  } else {
    parse_list(s);
    if (coeffs.size() != 1) throw ConfigError("field '" + s + "': expected poly:c0,c1,... or a number");
  }
  if (coeffs.empty()) throw ConfigError("field '" + s + "' has no coefficients");
  return polynomial(coeffs, var);
}

RunConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text.empty() ? std::string_view("{}") : json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    if (k == "class") {
      if (!v.is_string()) throw ConfigError("class: expected a string");
      c.cls = v.get<std::string>();
      if (c.cls != "general" && !parse_class(c.cls))
        throw ConfigError("class: unknown class '" + c.cls + "'");
    } else if (k == "params") {
      if (!v.is_object()) throw ConfigError("params: expected an object");
      for (auto p = v.begin(); p != v.end(); ++p) {
        auto q = parse_param(p.key());
        if (!q || *q == Param::Hbar || *q == Param::E || *q == Param::J)
          throw ConfigError("params: unknown parameter '" + p.key() + "'");
        c.params[param_name(*q)] = num(p.value(), "params");
      }
    } else if (k == "hbar") {
      c.hbar.clear();
      if (v.is_array()) {
        for (const json& h : v) c.hbar.push_back(num(h, "hbar"));
      } else {
        c.hbar.push_back(num(v, "hbar"));
      }
      if (c.hbar.empty()) throw ConfigError("hbar: empty list");
    } else if (k == "seed") {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        throw ConfigError("seed: expected a non-negative integer");
      c.seed = v.get<std::uint64_t>();
    } else if (k == "samples") {
      c.samples = integer(v, "samples", 1, 100000);
    } else if (k == "draws") {
      c.draws = integer(v, "draws", 1, 10000);
    } else if (k == "jet_order") {
      c.jet_order = integer(v, "jet_order", 1, 64);
    } else if (k == "tol") {
      if (!v.is_null()) c.tol = num(v, "tol");
    } else if (k == "output") {
      if (!v.is_string()) throw ConfigError("output: expected text or json");
      c.output = v.get<std::string>();
    } else if (k == "grid_n") {
      c.grid_n = integer(v, "grid_n", 64, 1000000);
    } else if (k == "e_range") {
      c.e_range = parse_interval(v, "e_range");
    } else if (k == "branches") {
      if (!v.is_array()) throw ConfigError("branches: expected [[m, n], ...]");
      c.branches.clear();
      for (const json& b : v) {
        if (!b.is_array() || b.size() != 2) throw ConfigError("branches: expected [[m, n], ...]");
        c.branches.emplace_back(integer(b[0], "branches", 0, 1000), integer(b[1], "branches", 0, 1000));
      }
    } else if (k == "u_box") {
      c.u_box = parse_interval(v, "u_box");
    } else if (k == "v_box") {
      c.v_box = parse_interval(v, "v_box");
    } else if (k == "oracle") {
      if (!v.is_boolean()) throw ConfigError("oracle: expected true or false");
      c.oracle = v.get<bool>();
    } else if (k == "interval") {
      c.interval = parse_interval(v, "interval");
    } else if (k == "weights") {
      if (!v.is_array() || v.size() != 2) throw ConfigError("weights: expected [w1, w2]");
      c.weights = {num(v[0], "weights"), num(v[1], "weights")};
    } else if (k == "energy") {
      c.energy = num(v, "energy");
    } else if (k == "separation") {
      if (!v.is_null()) c.separation = num(v, "separation");
    } else if (k == "general") {
      if (!v.is_object()) throw ConfigError("general: expected an object");
      for (auto g = v.begin(); g != v.end(); ++g) {
        if (!g.value().is_string()) throw ConfigError("general." + g.key() + ": expected a string");
        const std::string s = g.value().get<std::string>();
        if (g.key() == "kind") c.general.kind = s;
        else if (g.key() == "F") c.general.F = s;
        else if (g.key() == "G") c.general.G = s;
        else if (g.key() == "f") c.general.f = s;
        else if (g.key() == "g") c.general.g = s;
        else throw ConfigError("general: unknown key '" + g.key() + "'");
      }
      if (c.general.kind != "liouville" && c.general.kind != "lie")
        throw ConfigError("general.kind: expected liouville or lie");
    } else {
      throw ConfigError("unknown config key '" + k + "'");
    }
  }
  for (Real h : c.hbar)
    if (!(h > 0) || !std::isfinite(h)) throw ConfigError("hbar must be > 0");
  if (c.output != "text" && c.output != "json") throw ConfigError("output: expected text or json");
  if (c.tol && !(*c.tol > 0)) throw ConfigError("tol must be > 0");
  for (const Interval* iv : {&c.e_range, &c.u_box, &c.v_box, &c.interval})
    if (!(iv->b > iv->a)) throw ConfigError("intervals need a < b");
  // fields must parse
  parse_field_spec(c.general.F, ScalarField::xi());
  parse_field_spec(c.general.G, ScalarField::xi());
  parse_field_spec(c.general.f, ScalarField::xi());
  parse_field_spec(c.general.g, ScalarField::xi());
  return c;
}

namespace {
json config_json(const RunConfig& c) {
  json j;
  j["class"] = c.cls;
  json p = json::object();
  for (const auto& [k, v] : c.params) p[k] = v;
  j["params"] = p;
  j["hbar"] = real_array(c.hbar);
  j["seed"] = c.seed;
  j["samples"] = c.samples;
  j["draws"] = c.draws;
  j["jet_order"] = c.jet_order;
  j["tol"] = c.tol ? json(*c.tol) : json(nullptr);
  j["output"] = c.output;
  j["grid_n"] = c.grid_n;
  j["e_range"] = {c.e_range.a, c.e_range.b};
  json br = json::array();
  for (auto [m, n] : c.branches) br.push_back({m, n});
  j["branches"] = br;
  j["u_box"] = {c.u_box.a, c.u_box.b};
  j["v_box"] = {c.v_box.a, c.v_box.b};
  j["oracle"] = c.oracle;
  j["interval"] = {c.interval.a, c.interval.b};
  j["weights"] = {c.weights.first, c.weights.second};
  j["energy"] = c.energy;
  j["separation"] = c.separation ? json(*c.separation) : json(nullptr);
  j["general"] = {{"kind", c.general.kind},
                  {"F", c.general.F},
                  {"G", c.general.G},
                  {"f", c.general.f},
                  {"g", c.general.g}};
  return j;
}
}  // namespace

std::string config_to_json(const RunConfig& cfg) { return to_json_text(config_json(cfg)); }

ResolvedSystem resolve_system(const RunConfig& cfg, int draw, Real hbar) {
  ResolvedSystem rs;
  rs.env = random_params(draw_seed(cfg.seed, draw), hbar);
  for (const auto& [k, v] : cfg.params) rs.env.set(*parse_param(k), v);
  rs.env.hbar = hbar;
  if (cfg.cls == "general") {
    const bool lie = cfg.general.kind == "lie";
    const ScalarField var = lie ? ScalarField::eta() : ScalarField::xi();
    const ScalarField F = parse_field_spec(cfg.general.F, var);
    const ScalarField G = parse_field_spec(cfg.general.G, var);
    const ScalarField f = parse_field_spec(cfg.general.f, var);
    const ScalarField g = parse_field_spec(cfg.general.g, var);
    MetricProbe probe;
    probe.domain = rs.domain;
    probe.env = rs.env;
    probe.seed = point_seed(cfg.seed, draw);
    rs.base = lie ? build_lie(F, G, f, g, std::nullopt, std::nullopt, probe)
                  : build_liouville(F, G, f, g, probe);
    return rs;
  }
  const ClassTag tag = *parse_class(cfg.cls);
  SuperSystem s = build_class(tag, rs.env);
  rs.tag = tag;
  rs.base = s.base;
  rs.B = s.B;
  rs.domain = s.domain;
  return rs;
}

Report run_command(std::string_view command, const RunConfig& cfg) {
  json root;
  root["schema_version"] = kSchemaVersion;
  root["command"] = std::string(command);
  root["config"] = config_json(cfg);
  Checks checks;
  int code = 0;
  const auto t0 = std::chrono::steady_clock::now();
  std::string error;
  auto fail = [&](int c, const char* kind, const std::string& what) {
    code = c;
    error = what;
    root["error"] = {{"kind", kind}, {"message", what}};
  };
  try {
    json body;
    if (command == "verify") body = cmd_verify(cfg, checks);
    else if (command == "fit") body = cmd_fit(cfg, checks);
    else if (command == "casimir") body = cmd_casimir(cfg, checks);
    else if (command == "spectrum") body = cmd_spectrum(cfg, checks);
    else if (command == "wkb") body = cmd_wkb(cfg, checks);
    else if (command == "catalog") body = cmd_catalog();
    else throw ConfigError("unknown command '" + std::string(command) + "'");
    root["result"] = body;
    code = checks.failed ? 1 : 0;
  } catch (const ConfigError& e) {
    fail(2, "config", e.what());
  } catch (const BracketFailure& e) {
    root["result"] = e.partial();
    fail(3, "bracketing", e.what());
  } catch (const RankDeficient& e) {
    fail(3, "rank_deficient", e.what());
  } catch (const QuadratureError& e) {
    fail(3, "quadrature", e.what());
  } catch (const DegenerateMetric& e) {
    fail(3, "degenerate_metric", e.what());
  } catch (const DomainError& e) {
    fail(3, "domain", e.what());
  } catch (const SolverError& e) {
    fail(3, "solver", e.what());
  } catch (const std::invalid_argument& e) {
    fail(2, "config", e.what());
  } catch (const std::exception& e) {
    fail(3, "runtime", e.what());
  }
  root["status"] = code == 0 ? "pass" : code == 1 ? "fail" : "error";
  root["exit_code"] = code;

  Report r;
  r.exit_code = code;
  r.error = error;
  r.json = to_json_text(root);
  std::ostringstream os;
  write_text(os, root, 0);
  os << "elapsed_ms: "
     << std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count()
     << "\n";
  r.text = os.str();
  return r;
}

Report run_command_json(std::string_view command, std::string_view config_json_text) {
  RunConfig cfg;
  try {
    cfg = parse_config(config_json_text);
  } catch (const ConfigError& e) {
    json root;
    root["schema_version"] = kSchemaVersion;
    root["command"] = std::string(command);
    root["error"] = {{"kind", "config"}, {"message", e.what()}};
    root["status"] = "error";
    root["exit_code"] = 2;
    Report r;
    r.exit_code = 2;
    r.error = e.what();
    r.json = to_json_text(root);
    r.text = std::string("error: ") + e.what() + "\n";
    return r;
  }
  return run_command(command, cfg);
}

}  // namespace qsint
