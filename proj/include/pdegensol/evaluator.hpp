#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pdegensol/errors.hpp"
#include "pdegensol/expr.hpp"
#include "pdegensol/function_instance.hpp"
#include "pdegensol/jet.hpp"
#include "pdegensol/numeric_config.hpp"
#include "pdegensol/quadrature.hpp"
#include "pdegensol/roots.hpp"
#include "pdegensol/symbolic.hpp"

namespace pdegensol {

/// Records how close an evaluation came to each singularity guard. Used by
/// the scenario pre-scan to reject instantiations that approach a pole.
struct GuardMonitor {
  double min_denominator = std::numeric_limits<double>::infinity();
  double min_radicand = std::numeric_limits<double>::infinity();  // ln, sqrt, fractional pow
  double min_tan_margin = std::numeric_limits<double>::infinity();  // |cos| of tan argument
  double min_root_slope = std::numeric_limits<double>::infinity();

  double worst() const {
    return std::min({min_denominator, min_radicand, min_tan_margin, min_root_slope});
  }
};

struct EvalStats {
  long root_solves = 0;
  double max_root_residual = 0.0;
  long quadratures = 0;
};

/// Numeric evaluation context: variable/parameter bindings, function
/// instances, integration base points and the RootOf continuation cache.
/// Not thread-safe; use one per thread.
class Evaluator {
 public:
  explicit Evaluator(NumericConfig cfg = {}) : cfg_(cfg), active_(&IndexSet::scalar()) { cfg_.validate(); }

  const NumericConfig& config() const { return cfg_; }
  void set_config(const NumericConfig& cfg) {
    cfg.validate();
    cfg_ = cfg;
  }

  /// Jets produced by eval() live over this set. Independent variables are
  /// numbered in the order given here.
  void set_point(std::shared_ptr<const IndexSet> set, const std::vector<std::pair<std::string, double>>& point) {
    set_ = std::move(set);
    active_ = set_ ? set_.get() : &IndexSet::scalar();
    point_.clear();
    for (std::size_t i = 0; i < point.size(); ++i)
      point_.emplace_back(intern(point[i].first), Jet::variable(*active_, i, point[i].second));
  }

  /// Scalar-only evaluation at `point`.
  void set_point(const std::vector<std::pair<std::string, double>>& point) { set_point(nullptr, point); }

  void bind_parameter(const std::string& name, double v) { params_[intern(name)] = v; }
  void bind_function(const std::string& name, FunctionInstance f) {
    functions_[intern(name)] = std::move(f);
    derived_.clear();
    resolved_.clear();
  }
  void set_base_point(const std::string& key, double v) { bases_[intern(key)] = v; }

  /// Fixed value for F^{(orders)} regardless of its arguments (used for the
  /// unknown w and its partials inside a PDE left-hand side).
  void override_function(const std::string& name, std::vector<int> orders, double v) {
    overrides_[{intern(name), std::move(orders)}] = v;
  }
  void clear_overrides() { overrides_.clear(); }

  void set_monitor(GuardMonitor* m) { monitor_ = m; }
  void set_seed_sign(double s) { seed_sign_ = s; }
  void reset_root_cache() { root_cache_.clear(); }
  const EvalStats& stats() const { return stats_; }

  Jet eval(const Expr& e) {
    depth_ = 0;
    scope_.clear();
    return ev(e);
  }

  double eval_scalar(const Expr& e) {
    Frame frame(*this);
    active_ = &IndexSet::scalar();
    return eval(e).value();
  }

 private:
  struct OverrideKey {
    int sym;
    std::vector<int> orders;
    bool operator<(const OverrideKey& o) const {
      return sym != o.sym ? sym < o.sym : orders < o.orders;
    }
  };

  NumericConfig cfg_;
  std::shared_ptr<const IndexSet> set_;
  const IndexSet* active_;
  std::vector<std::pair<int, Jet>> point_;
  std::vector<std::pair<int, Jet>> scope_;
  std::unordered_map<int, double> params_;
  std::unordered_map<int, FunctionInstance> functions_;
  std::map<OverrideKey, FunctionInstance> derived_;  // partials of bound functions
  // Per-node caches hold the node itself so its address cannot be reused.
  std::unordered_map<const Node*, std::pair<Expr, const FunctionInstance*>> resolved_;
  std::unordered_map<int, double> bases_;
  std::map<OverrideKey, double> overrides_;
  std::unordered_map<const Node*, std::pair<Expr, double>> root_cache_;
  std::unordered_map<const Node*, std::pair<Expr, Expr>> root_slope_;
  GuardMonitor* monitor_ = nullptr;
  double seed_sign_ = 1.0;
  int depth_ = 0;
  EvalStats stats_;

  // Restores scope size, nesting depth and active index set on exit.
  class Frame {
   public:
    explicit Frame(Evaluator& ev) : ev_(ev), scope_(ev.scope_.size()), depth_(ev.depth_), active_(ev.active_) {}
    ~Frame() {
      ev_.scope_.resize(scope_);
      ev_.depth_ = depth_;
      ev_.active_ = active_;
    }
    Frame(const Frame&) = delete;
    Frame& operator=(const Frame&) = delete;

   private:
    Evaluator& ev_;
    std::size_t scope_;
    int depth_;
    const IndexSet* active_;
  };

  Jet constant(double v) const { return Jet(*active_, v); }

  Jet fit(const Jet& j) const {
    if (&j.set() == active_) return j;
    if (j.is_scalar()) return Jet(*active_, j.value());
    return Jet(*active_, j.value());
  }

  Jet lookup(const Node& n) const {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
      if (it->first == n.sym) return fit(it->second);
    for (const auto& [sym, j] : point_)
      if (sym == n.sym) return fit(j);
    if (auto it = params_.find(n.sym); it != params_.end()) return constant(it->second);
    throw std::invalid_argument("unbound name '" + n.name + "'");
  }

  void check_denominator(double d) {
    if (monitor_) monitor_->min_denominator = std::min(monitor_->min_denominator, std::abs(d));
    if (!(std::abs(d) >= kTinyDenominator)) throw DomainError("division by near-zero value");
  }

  void check_radicand(double v, const char* what) {
    if (monitor_) monitor_->min_radicand = std::min(monitor_->min_radicand, v);
    if (!(v >= kTinyDenominator)) throw DomainError(std::string(what) + " of non-positive argument");
  }

  static Jet finite(Jet j) {
    if (!std::isfinite(j.value())) throw DomainError("non-finite intermediate value");
    return j;
  }

  Jet ev(const Expr& e) {
    const Node& n = e.node();
    switch (n.kind) {
      case Kind::Constant:
        return constant(n.value);
      case Kind::Variable:
      case Kind::Parameter:
        return lookup(n);
      case Kind::BasePoint:
        return constant(base_value(n));
      case Kind::FuncApp:
        return func_app(e);
      case Kind::Neg:
        return -ev(n.args[0]);
      case Kind::Add: {
        Jet acc = ev(n.args[0]);
        for (std::size_t i = 1; i < n.args.size(); ++i) acc += ev(n.args[i]);
        return acc;
      }
      case Kind::Mul: {
        Jet acc = ev(n.args[0]);
        for (std::size_t i = 1; i < n.args.size(); ++i) acc = acc * ev(n.args[i]);
        return acc;
      }
      case Kind::Div: {
        Jet num = ev(n.args[0]);
        Jet den = ev(n.args[1]);
        check_denominator(den.value());
        return num / den;
      }
      case Kind::Pow:
        return power(ev(n.args[0]), ev(n.args[1]));
      case Kind::Exp: {
        Jet u = ev(n.args[0]);
        if (u.value() > 700.0) throw DomainError("exp overflow");
        return pdegensol::exp(u);
      }
      case Kind::Ln: {
        Jet u = ev(n.args[0]);
        check_radicand(u.value(), "ln");
        return pdegensol::log(u);
      }
      case Kind::Sqrt: {
        Jet u = ev(n.args[0]);
        check_radicand(u.value(), "sqrt");
        return pdegensol::sqrt(u);
      }
      case Kind::Sin:
        return pdegensol::sin(ev(n.args[0]));
      case Kind::Cos:
        return pdegensol::cos(ev(n.args[0]));
      case Kind::Tan: {
        Jet u = ev(n.args[0]);
        double c = std::abs(std::cos(u.value()));
        if (monitor_) monitor_->min_tan_margin = std::min(monitor_->min_tan_margin, c);
        // distance to the nearest pole pi/2 + k*pi
        double r = std::remainder(u.value() - std::numbers::pi / 2, std::numbers::pi);
        if (std::abs(r) < kTanPoleMargin) throw DomainError("tan argument near a pole");
        return pdegensol::tan(u);
      }
      case Kind::Integral:
        return integral(n);
      case Kind::RootOf:
        return root_of(e);
      case Kind::Let: {
        Frame frame(*this);
        Jet bound = ev(n.args[0]);
        scope_.emplace_back(n.sym, bound);
        return ev(n.args[1]);
      }
    }
    throw std::logic_error("unhandled expression kind");
  }

  double base_value(const Node& n) const {
    auto it = bases_.find(n.sym);
    if (it == bases_.end()) throw std::invalid_argument("no base point for '" + n.name + "'");
    return it->second;
  }

  Jet power(const Jet& base, const Jet& ex) {
    bool const_exp = true;
    for (std::size_t i = 1; i < ex.size(); ++i) const_exp &= ex.coeff(i) == 0.0;
    if (const_exp) {
      double p = ex.value();
      if (p == 0.0) return constant(1.0);
      bool integral_exp = std::floor(p) == p && std::abs(p) < 64;
      if (integral_exp) {
        if (p < 0) check_denominator(base.value());
        if (p == 1.0) return base;
        if (p == 2.0) return base * base;
        return finite(pdegensol::pow(base, p));
      }
      check_radicand(base.value(), "fractional power");
      return finite(pdegensol::pow(base, p));
    }
    check_radicand(base.value(), "real power");
    return finite(pdegensol::exp(ex * pdegensol::log(base)));
  }

  const FunctionInstance& instance(const Expr& e) {
    const Node& n = e.node();
    if (auto r = resolved_.find(&n); r != resolved_.end()) return *r->second.second;
    auto it = functions_.find(n.sym);
    if (it == functions_.end()) throw std::invalid_argument("no instance for function '" + n.name + "'");
    const FunctionInstance* f = &it->second;
    MultiIndex gamma{};
    for (std::size_t i = 0; i < n.orders.size() && i < kMaxVars; ++i) gamma[i] = static_cast<std::uint8_t>(n.orders[i]);
    if (total_order(gamma) > 0) {
      auto [d, inserted] = derived_.try_emplace({n.sym, n.orders});
      if (inserted) d->second = f->derivative(gamma);
      f = &d->second;
    }
    resolved_.emplace(&n, std::pair{e, f});
    return *f;
  }

  Jet func_app(const Expr& e) {
    const Node& n = e.node();
    if (!overrides_.empty()) {
      auto it = overrides_.find({n.sym, n.orders});
      if (it != overrides_.end()) return constant(it->second);
    }
    const FunctionInstance& f = instance(e);
    if (n.args.size() != f.arity) throw std::invalid_argument("function '" + n.name + "' applied with wrong arity");
    if (active_->size() == 1) {
      std::array<double, kMaxVars> u{};
      for (std::size_t i = 0; i < n.args.size(); ++i) u[i] = ev(n.args[i]).value();
      double v = f.value(std::span<const double>(u.data(), n.args.size()));
      if (!std::isfinite(v)) throw DomainError("non-finite intermediate value");
      return constant(v);
    }
    std::array<Jet, kMaxVars> args;
    for (std::size_t i = 0; i < n.args.size(); ++i) args[i] = ev(n.args[i]);
    return finite(f.apply(std::span<const Jet>(args.data(), n.args.size())));
  }

  Jet integral(const Node& n) {
    const Expr& integrand = n.args[0];
    Jet lo = ev(n.args[1]);
    Jet hi = ev(n.args[2]);
    Jet span = hi - lo;
    Frame frame(*this);
    if (++depth_ > cfg_.nest_limit)
      throw NestLimitExceeded("integral nesting exceeds limit " + std::to_string(cfg_.nest_limit));
    ++stats_.quadratures;
    const int sym = n.sym;
    auto f = [&](double s) {
      Frame inner(*this);
      scope_.emplace_back(sym, lo + span * s);
      return ev(integrand);
    };
    QuadratureResult q = integrate(f, 0.0, 1.0, cfg_);
    return span * q.value;
  }

  const Expr& slope_expr(const Expr& e) {
    auto it = root_slope_.find(e.get());
    if (it != root_slope_.end()) return it->second.second;
    Expr dz = simplify(differentiate(e.arg(0), e.name()));
    return root_slope_.emplace(e.get(), std::pair{e, std::move(dz)}).first->second.second;
  }

  Jet root_of(const Expr& e) {
    const Node& n = e.node();
    const Expr& phi = n.args[0];
    const Expr& dphi = slope_expr(e);

    double seed = 0.0;
    bool warm = false;
    if (auto it = root_cache_.find(e.get()); it != root_cache_.end()) {
      seed = it->second.second;
      warm = true;
    } else {
      if (n.args.size() > 1) {
        Frame frame(*this);
        active_ = &IndexSet::scalar();
        seed = ev(n.args[1]).value();
      }
      seed *= seed_sign_;
    }

    auto scalar_at = [&](const Expr& body, double z) {
      Frame frame(*this);
      active_ = &IndexSet::scalar();
      scope_.emplace_back(n.sym, Jet(IndexSet::scalar(), z));
      return ev(body).value();
    };

    RootResult r;
    {
      GuardMonitor* saved_monitor = monitor_;
      monitor_ = nullptr;
      try {
        r = find_root([&](double z) { return scalar_at(phi, z); }, [&](double z) { return scalar_at(dphi, z); },
                      seed, cfg_, warm);
      } catch (...) {
        monitor_ = saved_monitor;
        throw;
      }
      monitor_ = saved_monitor;
    }

    // Re-evaluate at the root with guards recorded.
    const double slope = scalar_at(dphi, r.root);
    r.residual = std::abs(scalar_at(phi, r.root));
    ++stats_.root_solves;
    stats_.max_root_residual = std::max(stats_.max_root_residual, r.residual);
    if (monitor_) monitor_->min_root_slope = std::min(monitor_->min_root_slope, std::abs(slope));
    if (r.residual > 1e3 * cfg_.root_tol) throw RootNotFound("root refinement did not reach tolerance");
    if (std::abs(slope) < kDegenerateSlope) throw DegenerateRoot("vanishing slope at root");
    root_cache_[e.get()] = {e, r.root};

    if (active_->size() == 1) return constant(r.root);
    // Implicit derivatives: z <- z - phi(z)/phi_z(z0); each pass fixes one more order.
    Jet z(*active_, r.root);
    const double inv = 1.0 / slope;
    for (int k = 0; k <= active_->order(); ++k) {
      Jet v;
      {
        Frame frame(*this);
        scope_.emplace_back(n.sym, z);
        v = ev(phi);
      }
      Jet corr = v * inv;
      corr.coeff(0) = 0.0;
      z -= corr;
    }
    return z;
  }
};

}  // namespace pdegensol
