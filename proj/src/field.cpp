#include "qsint/field.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace qsint {

namespace detail {

enum class NodeKind {
  Constant,
  Xi,
  Eta,
  Parameter,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Pow,
  Unary,
  Compose,
  Antiderivative,
  Derivative
};

struct Node {
  NodeKind kind = NodeKind::Constant;
  Real value = 0;  // constant value, or exponent for Pow, or tolerance for Antiderivative
  Param param = Param::Kappa;
  Elementary fn = Elementary::Exp;
  int di = 0, dj = 0;
  std::vector<std::shared_ptr<const Node>> children;
  bool dep_xi = false;
  bool dep_eta = false;
};

}  // namespace detail

using detail::Node;
using detail::NodeKind;
using NodePtr = std::shared_ptr<const Node>;

namespace {

NodePtr make_constant(Real c) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Constant;
  n->value = c;
  return n;
}

NodePtr make(NodeKind kind, std::vector<NodePtr> children) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  for (const auto& c : children) {
    n->dep_xi = n->dep_xi || c->dep_xi;
    n->dep_eta = n->dep_eta || c->dep_eta;
  }
  n->children = std::move(children);
  return n;
}

std::optional<Real> literal_of(const NodePtr& n) {
  if (n->kind == NodeKind::Constant) return n->value;
  return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters

const char* param_name(Param p) {
  switch (p) {
    case Param::Kappa: return "kappa";
    case Param::Lambda: return "lambda";
    case Param::Mu: return "mu";
    case Param::Nu: return "nu";
    case Param::K: return "k";
    case Param::L: return "l";
    case Param::M: return "m";
    case Param::N: return "n";
    case Param::Hbar: return "hbar";
    case Param::Eta0: return "eta0";
    case Param::E: return "E";
    case Param::J: return "J";
  }
  return "?";
}

std::optional<Param> parse_param(std::string_view name) {
  static constexpr std::array<Param, 12> all = {Param::Kappa, Param::Lambda, Param::Mu,
                                                Param::Nu,    Param::K,      Param::L,
                                                Param::M,     Param::N,      Param::Hbar,
                                                Param::Eta0,  Param::E,      Param::J};
  for (Param p : all)
    if (name == param_name(p)) return p;
  if (name == "ell") return Param::L;
  return std::nullopt;
}

Real ParamEnv::get(Param p) const {
  switch (p) {
    case Param::Kappa: return kappa;
    case Param::Lambda: return lambda;
    case Param::Mu: return mu;
    case Param::Nu: return nu;
    case Param::K: return k;
    case Param::L: return l;
    case Param::M: return m;
    case Param::N: return n;
    case Param::Hbar: return hbar;
    case Param::Eta0: return eta0;
    case Param::E: return E;
    case Param::J: return J;
  }
  return 0;
}

void ParamEnv::set(Param p, Real v) {
  switch (p) {
    case Param::Kappa: kappa = v; break;
    case Param::Lambda: lambda = v; break;
    case Param::Mu: mu = v; break;
    case Param::Nu: nu = v; break;
    case Param::K: k = v; break;
    case Param::L: l = v; break;
    case Param::M: m = v; break;
    case Param::N: n = v; break;
    case Param::Hbar: hbar = v; break;
    case Param::Eta0: eta0 = v; break;
    case Param::E: E = v; break;
    case Param::J: J = v; break;
  }
}

void ParamEnv::validate() const {
  if (!(hbar > 0) || !std::isfinite(hbar)) throw std::invalid_argument("hbar must be positive");
}

// ---------------------------------------------------------------------------
// Construction

ScalarField::ScalarField() : node_(make_constant(0)) {}
ScalarField::ScalarField(Real c) : node_(make_constant(c)) {}

ScalarField ScalarField::xi() {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Xi;
  n->dep_xi = true;
  return ScalarField(NodePtr(n));
}

ScalarField ScalarField::eta() {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Eta;
  n->dep_eta = true;
  return ScalarField(NodePtr(n));
}

ScalarField ScalarField::param(Param p) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Parameter;
  n->param = p;
  return ScalarField(NodePtr(n));
}

ScalarField ScalarField::antiderivative(const ScalarField& integrand, const ScalarField& lower,
                                        Real tol) {
  if (integrand.depends_on_xi())
    throw std::invalid_argument("antiderivative: integrand must depend on eta only");
  if (lower.depends_on_xi() || lower.depends_on_eta())
    throw std::invalid_argument("antiderivative: lower limit must be coordinate independent");
  auto n = std::make_shared<Node>(*make(NodeKind::Antiderivative, {integrand.node_, lower.node_}));
  n->value = tol;
  n->dep_eta = true;
  return ScalarField(NodePtr(n));
}

ScalarField ScalarField::at(const ScalarField& x, const ScalarField& y) const {
  if (!depends_on_xi() && !depends_on_eta()) return *this;
  auto n = make(NodeKind::Compose, {node_, x.node_, y.node_});
  auto m = std::make_shared<Node>(*n);
  // Dependence is inherited from whichever map feeds a used coordinate.
  m->dep_xi = (depends_on_xi() && x.depends_on_xi()) || (depends_on_eta() && y.depends_on_xi());
  m->dep_eta =
      (depends_on_xi() && x.depends_on_eta()) || (depends_on_eta() && y.depends_on_eta());
  return ScalarField(NodePtr(m));
}

ScalarField ScalarField::derivative(int di, int dj) const {
  if (di < 0 || dj < 0) throw std::invalid_argument("negative derivative order");
  if (di == 0 && dj == 0) return *this;
  if ((di > 0 && !depends_on_xi()) || (dj > 0 && !depends_on_eta())) return ScalarField(0.0);
  if (node_->kind == NodeKind::Derivative)
    return ScalarField(node_->children[0]).derivative(di + node_->di, dj + node_->dj);
  auto n = std::make_shared<Node>(*make(NodeKind::Derivative, {node_}));
  n->di = di;
  n->dj = dj;
  return ScalarField(NodePtr(n));
}

bool ScalarField::depends_on_xi() const { return node_->dep_xi; }
bool ScalarField::depends_on_eta() const { return node_->dep_eta; }
std::optional<Real> ScalarField::literal() const { return literal_of(node_); }
bool ScalarField::is_zero() const {
  auto v = literal();
  return v && *v == 0;
}

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  auto la = a.literal(), lb = b.literal();
  if (la && lb) return ScalarField(*la + *lb);
  if (la && *la == 0) return b;
  if (lb && *lb == 0) return a;
  return ScalarField(make(NodeKind::Add, {a.node_, b.node_}));
}

ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  auto la = a.literal(), lb = b.literal();
  if (la && lb) return ScalarField(*la - *lb);
  if (lb && *lb == 0) return a;
  if (la && *la == 0) return -b;
  return ScalarField(make(NodeKind::Sub, {a.node_, b.node_}));
}

ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  auto la = a.literal(), lb = b.literal();
  if (la && lb) return ScalarField(*la * *lb);
  if ((la && *la == 0) || (lb && *lb == 0)) return ScalarField(0.0);
  if (la && *la == 1) return b;
  if (lb && *lb == 1) return a;
  return ScalarField(make(NodeKind::Mul, {a.node_, b.node_}));
}

ScalarField operator/(const ScalarField& a, const ScalarField& b) {
  auto la = a.literal(), lb = b.literal();
  if (la && *la == 0) return ScalarField(0.0);
  if (lb && *lb == 1) return a;
  if (la && lb && *lb != 0) return ScalarField(*la / *lb);
  return ScalarField(make(NodeKind::Div, {a.node_, b.node_}));
}

ScalarField ScalarField::operator-() const {
  if (auto l = literal()) return ScalarField(-*l);
  return ScalarField(make(NodeKind::Neg, {node_}));
}

ScalarField pow(const ScalarField& a, Real r) {
  if (r == 1) return a;
  if (r == 0) return ScalarField(1.0);
  if (auto l = a.literal()) return ScalarField(std::pow(*l, r));
  auto n = std::make_shared<Node>(*make(NodeKind::Pow, {a.node_}));
  n->value = r;
  return ScalarField(NodePtr(n));
}

ScalarField apply(Elementary kind, const ScalarField& a) {
  auto n = std::make_shared<Node>(*make(NodeKind::Unary, {a.node_}));
  n->fn = kind;
  return ScalarField(NodePtr(n));
}

ScalarField polynomial(std::span<const Real> coeffs, const ScalarField& x) {
  ScalarField acc;
  for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + ScalarField(coeffs[i]);
  return acc;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

void render(const Node& n, std::ostream& os) {
  auto child = [&](std::size_t i) -> const Node& { return *n.children[i]; };
  switch (n.kind) {
    case NodeKind::Constant: os << n.value; break;
    case NodeKind::Xi: os << "xi"; break;
    case NodeKind::Eta: os << "eta"; break;
    case NodeKind::Parameter: os << param_name(n.param); break;
    case NodeKind::Add:
      os << "(";
      render(child(0), os);
      os << " + ";
      render(child(1), os);
      os << ")";
      break;
    case NodeKind::Sub:
      os << "(";
      render(child(0), os);
      os << " - ";
      render(child(1), os);
      os << ")";
      break;
    case NodeKind::Mul:
      render(child(0), os);
      os << "*";
      render(child(1), os);
      break;
    case NodeKind::Div:
      render(child(0), os);
      os << "/(";
      render(child(1), os);
      os << ")";
      break;
    case NodeKind::Neg:
      os << "-(";
      render(child(0), os);
      os << ")";
      break;
    case NodeKind::Pow:
      os << "(";
      render(child(0), os);
      os << ")^" << n.value;
      break;
    case NodeKind::Unary:
      os << to_string(n.fn) << "(";
      render(child(0), os);
      os << ")";
      break;
    case NodeKind::Compose:
      os << "[";
      render(child(0), os);
      os << "]{xi:=";
      render(child(1), os);
      os << ", eta:=";
      render(child(2), os);
      os << "}";
      break;
    case NodeKind::Antiderivative:
      os << "int_{";
      render(child(1), os);
      os << "}^{eta} ";
      render(child(0), os);
      os << " d eta";
      break;
    case NodeKind::Derivative:
      os << "D[" << n.di << "," << n.dj << "](";
      render(child(0), os);
      os << ")";
      break;
  }
}

std::string short_render(const Node& n) {
  std::ostringstream os;
  os.precision(6);
  render(n, os);
  auto s = os.str();
  if (s.size() > 120) s = s.substr(0, 117) + "...";
  return s;
}

}  // namespace

std::string ScalarField::to_string() const {
  std::ostringstream os;
  os.precision(10);
  render(*node_, os);
  return os.str();
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

struct Key {
  int ctx;
  const Node* node;
  bool operator==(const Key& o) const { return ctx == o.ctx && node == o.node; }
};

struct KeyHash {
  std::size_t operator()(const Key& k) const {
    return std::hash<const void*>()(k.node) ^ (static_cast<std::size_t>(k.ctx) * 0x9e3779b97f4a7c15ULL);
  }
};

struct Entry {
  int demand = -1;
  int inner_ctx = -1;  // Compose only
  std::optional<Jet2> jet;
};

}  // namespace

struct FieldEvaluator::Impl {
  ParamEnv env;
  std::vector<Point> contexts;
  std::unordered_map<Key, Entry, KeyHash> entries;
  std::vector<Key> postorder;

  int ctx_of(Point p) {
    for (std::size_t i = 0; i < contexts.size(); ++i)
      if (contexts[i] == p) return static_cast<int>(i);
    contexts.push_back(p);
    return static_cast<int>(contexts.size()) - 1;
  }

  // Children of a visited key with the order shift each one needs.
  void children(const Key& key, std::vector<std::pair<Key, int>>& out) {
    const Node& n = *key.node;
    out.clear();
    switch (n.kind) {
      case NodeKind::Compose: {
        Entry& e = entries.at(key);
        out.push_back({{key.ctx, n.children[1].get()}, 0});
        out.push_back({{key.ctx, n.children[2].get()}, 0});
        out.push_back({{e.inner_ctx, n.children[0].get()}, 1});
        break;
      }
      case NodeKind::Derivative:
        out.push_back({{key.ctx, n.children[0].get()}, n.di + n.dj});
        break;
      case NodeKind::Antiderivative:
        out.push_back({{key.ctx, n.children[0].get()}, -1});
        out.push_back({{key.ctx, n.children[1].get()}, std::numeric_limits<int>::min()});
        break;
      default:
        for (const auto& c : n.children) out.push_back({{key.ctx, c.get()}, 0});
    }
  }

  void visit(const Key& root) {
    // Iterative DFS producing a postorder of (context, node) pairs.
    struct Frame {
      Key key;
      std::vector<std::pair<Key, int>> kids;
      std::size_t next = 0;
    };
    if (entries.count(root)) return;
    entries.emplace(root, Entry{});
    prepare(root);
    std::vector<Frame> stack;
    stack.push_back({root, {}, 0});
    children(root, stack.back().kids);
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < f.kids.size()) {
        Key child = f.kids[f.next++].first;
        if (entries.count(child)) continue;
        entries.emplace(child, Entry{});
        prepare(child);
        Frame nf{child, {}, 0};
        children(child, nf.kids);
        stack.push_back(std::move(nf));
      } else {
        postorder.push_back(f.key);
        stack.pop_back();
      }
    }
  }

  // Resolves the inner evaluation point of a Compose node.
  void prepare(const Key& key) {
    const Node& n = *key.node;
    if (n.kind != NodeKind::Compose) return;
    const Point p = contexts[static_cast<std::size_t>(key.ctx)];
    FieldEvaluator sub(env, p);
    const std::pair<ScalarField, int> req[] = {{ScalarField(n.children[1]), 0},
                                               {ScalarField(n.children[2]), 0}};
    auto vals = sub.eval(req);
    const int inner = ctx_of(Point{vals[0].value(), vals[1].value()});
    entries.at(key).inner_ctx = inner;
  }

  Jet2 child_jet(const Key& k, int order) {
    const Entry& e = entries.at(k);
    if (!e.jet || e.jet->order() < order)
      throw std::logic_error("field evaluator: child evaluated at insufficient order");
    if (e.jet->order() == order) return *e.jet;
    return e.jet->truncated(order);
  }

  Jet2 compute(const Key& key, int k) {
    const Node& n = *key.node;
    const Point base = contexts[static_cast<std::size_t>(key.ctx)];
    auto kid = [&](std::size_t i, int order) {
      return child_jet(Key{key.ctx, n.children[i].get()}, order);
    };
    switch (n.kind) {
      case NodeKind::Constant: return Jet2::constant(n.value, k, base);
      case NodeKind::Xi: return Jet2::variable(Axis::Xi, base.xi, k, base);
      case NodeKind::Eta: return Jet2::variable(Axis::Eta, base.eta, k, base);
      case NodeKind::Parameter: return Jet2::constant(env.get(n.param), k, base);
      case NodeKind::Add: return kid(0, k) + kid(1, k);
      case NodeKind::Sub: return kid(0, k) - kid(1, k);
      case NodeKind::Mul: return kid(0, k) * kid(1, k);
      case NodeKind::Div: return kid(0, k) / kid(1, k);
      case NodeKind::Neg: return -kid(0, k);
      case NodeKind::Pow: return qsint::pow(kid(0, k), n.value);
      case NodeKind::Unary: return qsint::apply(n.fn, kid(0, k));
      case NodeKind::Compose: {
        const Entry& e = entries.at(key);
        Jet2 inner = child_jet(Key{e.inner_ctx, n.children[0].get()}, k + 1);
        return substitute(inner, kid(1, k), kid(2, k));
      }
      case NodeKind::Derivative:
        return kid(0, k + n.di + n.dj).derivative(n.di, n.dj);
      case NodeKind::Antiderivative: {
        const Real lower = child_jet(Key{key.ctx, n.children[1].get()}, 0).value();
        Jet2 out(k, base);
        out.coeff(0, 0) = quadrature(ScalarField(n.children[0]), base.xi, lower, base.eta, n.value);
        if (k >= 1) {
          Jet2 integrand = kid(0, k - 1);
          for (int j = 1; j <= k; ++j) out.coeff(0, j) = integrand.coeff(0, j - 1) / j;
        }
        return out;
      }
    }
    throw std::logic_error("unknown node kind");
  }

  // Adaptive Gauss-Kronrod with the stopping test taken against the L1 norm
  // of the integrand; boost's own test is relative to the running estimate
  // and never stops on integrals that nearly cancel.
  Real quadrature(const ScalarField& integrand, Real xi, Real a, Real b, Real tol) {
    if (a == b) return 0;
    using GK = boost::math::quadrature::gauss_kronrod<Real, 15>;
    auto f = [&](Real t) { return value(integrand, Point{xi, t}, env); };
    // the non-adaptive rule reports its error on [-1, 1]; L1 is already scaled
    auto rule = [&](Real lo, Real hi, Real& e, Real& l) {
      const Real r = GK::integrate(f, lo, hi, 0, 0, &e, &l);
      e *= 0.5 * std::abs(hi - lo);
      return r;
    };
    Real err = 0, l1 = 0;
    const Real whole = rule(a, b, err, l1);
    const Real target = tol * std::max<Real>(l1, std::numeric_limits<Real>::min());
    const Real width = std::abs(b - a);
    Real total_err = 0;
    std::function<Real(Real, Real, Real, Real, Real, int)> refine =
        [&](Real lo, Real hi, Real est, Real e, Real l, int depth) -> Real {
      const Real share = target * std::abs(hi - lo) / width;
      if (e <= share || e <= 64 * std::numeric_limits<Real>::epsilon() * l || depth == 0) {
        total_err += e;
        return est;
      }
      const Real mid = 0.5 * (lo + hi);
      Real e1 = 0, l1a = 0, e2 = 0, l2 = 0;
      const Real r1 = rule(lo, mid, e1, l1a);
      const Real r2 = rule(mid, hi, e2, l2);
      return refine(lo, mid, r1, e1, l1a, depth - 1) + refine(mid, hi, r2, e2, l2, depth - 1);
    };
    const Real result = refine(a, b, whole, err, l1, 24);
    if (!std::isfinite(result) || total_err > 100 * target) {
      std::ostringstream os;
      os.precision(17);
      os << "quadrature did not converge on [" << a << ", " << b << "], error estimate " << total_err;
      throw QuadratureError(os.str());
    }
    return result;
  }
};

FieldEvaluator::FieldEvaluator(const ParamEnv& env, Point p) : impl_(std::make_unique<Impl>()) {
  impl_->env = env;
  impl_->contexts.push_back(p);
}

FieldEvaluator::~FieldEvaluator() = default;

std::vector<Jet2> FieldEvaluator::eval(std::span<const std::pair<ScalarField, int>> requests) {
  Impl& im = *impl_;
  im.entries.clear();
  im.postorder.clear();
  im.contexts.resize(1);
  for (const auto& [f, order] : requests) {
    if (order < 0) throw JetError("negative jet order requested");
    im.visit(Key{0, f.node()});
  }
  for (const auto& [f, order] : requests) {
    Entry& e = im.entries.at(Key{0, f.node()});
    e.demand = std::max(e.demand, order);
  }
  // Reverse postorder visits every parent before its children.
  std::vector<std::pair<Key, int>> kids;
  for (auto it = im.postorder.rbegin(); it != im.postorder.rend(); ++it) {
    const int d = im.entries.at(*it).demand;
    if (d < 0) continue;
    im.children(*it, kids);
    for (const auto& [child, shift] : kids) {
      Entry& ce = im.entries.at(child);
      const int need = shift == std::numeric_limits<int>::min() ? 0 : d + shift;
      ce.demand = std::max(ce.demand, need);
    }
  }
  max_internal_order_ = 0;
  for (const Key& key : im.postorder) {
    Entry& e = im.entries.at(key);
    if (e.demand < 0) continue;
    max_internal_order_ = std::max(max_internal_order_, e.demand);
    try {
      e.jet = im.compute(key, e.demand);
    } catch (const DomainError& err) {
      if (err.path().empty()) throw err.with_path(short_render(*key.node));
      throw;
    }
  }
  std::vector<Jet2> out;
  out.reserve(requests.size());
  for (const auto& [f, order] : requests) out.push_back(im.child_jet(Key{0, f.node()}, order));
  return out;
}

Jet2 FieldEvaluator::eval(const ScalarField& f, int order) {
  const std::pair<ScalarField, int> req[] = {{f, order}};
  return std::move(eval(req).front());
}

Jet2 eval(const ScalarField& field, Point p, int order, const ParamEnv& env) {
  if (order > kMaxJetOrder) throw JetError("requested jet order exceeds the supported maximum");
  FieldEvaluator ev(env, p);
  return ev.eval(field, order);
}

Real value(const ScalarField& field, Point p, const ParamEnv& env) {
  FieldEvaluator ev(env, p);
  return ev.eval(field, 0).value();
}

}  // namespace qsint
