#pragma once

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdegensol/expr.hpp"

namespace pdegensol {

using Bindings = std::map<std::string, Expr>;

// ---------------------------------------------------------------------------
// Free names

namespace detail {

inline void collect_free(const Expr& e, std::set<std::string>& bound_stack_names,
                         std::multiset<std::string>& bound, std::set<std::string>& out) {
  const Node& n = e.node();
  auto scoped = [&](const Expr& body) {
    bound.insert(n.name);
    collect_free(body, bound_stack_names, bound, out);
    bound.erase(bound.find(n.name));
  };
  switch (n.kind) {
    case Kind::Variable:
    case Kind::Parameter:
      if (!bound.count(n.name)) out.insert(n.name);
      return;
    case Kind::FuncApp:
      out.insert(n.name);
      for (const auto& a : n.args) collect_free(a, bound_stack_names, bound, out);
      return;
    case Kind::Integral:
      collect_free(n.args[1], bound_stack_names, bound, out);
      collect_free(n.args[2], bound_stack_names, bound, out);
      scoped(n.args[0]);
      return;
    case Kind::RootOf:
      scoped(n.args[0]);
      if (n.args.size() > 1) collect_free(n.args[1], bound_stack_names, bound, out);
      return;
    case Kind::Let:
      collect_free(n.args[0], bound_stack_names, bound, out);
      scoped(n.args[1]);
      return;
    default:
      for (const auto& a : n.args) collect_free(a, bound_stack_names, bound, out);
  }
}

inline void collect_binders(const Expr& e, std::set<std::string>& out) {
  const Node& n = e.node();
  if (n.kind == Kind::Integral || n.kind == Kind::RootOf || n.kind == Kind::Let) out.insert(n.name);
  for (const auto& a : n.args) collect_binders(a, out);
}

inline std::string fresh_name(const std::string& base, const std::set<std::string>& avoid) {
  for (int i = 1;; ++i) {
    std::string cand = base + "_" + std::to_string(i);
    if (!avoid.count(cand)) return cand;
  }
}

}  // namespace detail

/// Names (variables, parameters, function names) occurring free in `e`.
inline std::set<std::string> free_variables(const Expr& e) {
  std::set<std::string> out, scratch;
  std::multiset<std::string> bound;
  detail::collect_free(e, scratch, bound, out);
  return out;
}

inline bool depends_on(const Expr& e, const std::string& name) {
  return free_variables(e).count(name) > 0;
}

inline Expr differentiate(const Expr& e, const std::string& v);

// ---------------------------------------------------------------------------
// Substitution

namespace detail {

inline Expr substitute_impl(const Expr& e, const Bindings& b);

inline Expr apply_function_binding(const Expr& app, const Expr& replacement, const Bindings& b) {
  const Node& n = app.node();
  bool plain = true;
  std::set<std::string> seen;
  for (const auto& a : n.args) {
    if (a.kind() != Kind::Variable || !seen.insert(a.name()).second) plain = false;
  }
  if (!plain) {
    throw std::invalid_argument("substitute: function '" + n.name +
                                "' can only be bound where applied to distinct variables");
  }
  Expr r = replacement;
  for (std::size_t i = 0; i < n.args.size(); ++i)
    for (int k = 0; k < n.orders[i]; ++k) r = differentiate(r, n.args[i].name());
  // Variables of the application are also subject to the other bindings.
  Bindings rest;
  for (const auto& [k, val] : b)
    if (k != n.name) rest.emplace(k, val);
  if (rest.empty()) return r;
  return substitute_impl(r, rest);
}

// Rename the binder of `e` if any binding that is live in its scope would be
// captured by it.
inline Expr avoid_capture(const Expr& e, const Expr& scoped_body, const Bindings& b, Bindings& inner) {
  const Node& n = e.node();
  inner.clear();
  for (const auto& [k, val] : b)
    if (k != n.name) inner.emplace(k, val);
  auto body_free = free_variables(scoped_body);
  bool capture = false;
  std::set<std::string> avoid = body_free;
  for (const auto& [k, val] : inner) {
    if (!body_free.count(k)) continue;
    auto fv = free_variables(val);
    avoid.insert(fv.begin(), fv.end());
    if (fv.count(n.name)) capture = true;
  }
  if (!capture) return {};
  for (const auto& [k, val] : b) avoid.insert(k);
  std::string renamed = fresh_name(n.name, avoid);
  inner.emplace(n.name, variable(renamed));
  return variable(renamed);
}

inline Expr substitute_impl(const Expr& e, const Bindings& b) {
  if (b.empty()) return e;
  const Node& n = e.node();
  switch (n.kind) {
    case Kind::Constant:
    case Kind::BasePoint:
      return e;
    case Kind::Variable:
    case Kind::Parameter: {
      auto it = b.find(n.name);
      return it == b.end() ? e : it->second;
    }
    case Kind::FuncApp: {
      std::vector<Expr> args;
      for (const auto& a : n.args) args.push_back(substitute_impl(a, b));
      auto it = b.find(n.name);
      if (it != b.end()) return apply_function_binding(e, it->second, b);
      return with_args(e, std::move(args));
    }
    case Kind::Integral:
    case Kind::RootOf:
    case Kind::Let: {
      std::size_t body_idx = n.kind == Kind::Let ? 1 : 0;
      Bindings inner;
      Expr renamed = avoid_capture(e, n.args[body_idx], b, inner);
      std::vector<Expr> args = n.args;
      for (std::size_t i = 0; i < args.size(); ++i) {
        if (i == body_idx) {
          args[i] = substitute_impl(args[i], inner);
        } else {
          args[i] = substitute_impl(args[i], b);
        }
      }
      Expr out = with_args(e, std::move(args));
      if (renamed) out = with_name(out, renamed.name());
      return out;
    }
    default: {
      std::vector<Expr> args;
      args.reserve(n.args.size());
      for (const auto& a : n.args) args.push_back(substitute_impl(a, b));
      return with_args(e, std::move(args));
    }
  }
}

}  // namespace detail

/// Capture-avoiding substitution. A key naming a function replaces its
/// applications (and their partials, via differentiate) by the bound
/// expression written in the application's argument variables.
/// Throws std::invalid_argument when a key names a bound dummy of `e`.
inline Expr substitute(const Expr& e, const Bindings& bindings) {
  std::set<std::string> binders;
  detail::collect_binders(e, binders);
  auto fv = free_variables(e);
  for (const auto& [k, v] : bindings) {
    if (binders.count(k) && !fv.count(k))
      throw std::invalid_argument("substitute: '" + k + "' is a bound dummy");
  }
  return detail::substitute_impl(e, bindings);
}

// ---------------------------------------------------------------------------
// Simplification

namespace detail {

inline bool finite_const(double v) { return std::isfinite(v); }

inline Expr simplify_add(std::vector<Expr> in) {
  std::vector<Expr> out;
  double acc = 0.0;
  bool has_const = false;
  for (auto& t : in) {
    if (t.kind() == Kind::Add) {
      for (const auto& c : t.args()) {
        if (c.is_constant()) {
          acc += c.value();
          has_const = true;
        } else {
          out.push_back(c);
        }
      }
    } else if (t.is_constant()) {
      acc += t.value();
      has_const = true;
    } else {
      out.push_back(std::move(t));
    }
  }
  if (has_const && acc != 0.0) out.push_back(constant(acc));
  if (out.empty()) return constant(0.0);
  if (out.size() == 1) return out.front();
  return add(std::move(out));
}

inline Expr simplify_mul(std::vector<Expr> in) {
  std::vector<Expr> out;
  double acc = 1.0;
  for (auto& f : in) {
    if (f.kind() == Kind::Mul) {
      for (const auto& c : f.args()) {
        if (c.is_constant()) {
          acc *= c.value();
        } else {
          out.push_back(c);
        }
      }
    } else if (f.is_constant()) {
      acc *= f.value();
    } else {
      out.push_back(std::move(f));
    }
  }
  if (acc == 0.0) return constant(0.0);
  if (out.empty()) return constant(acc);
  if (acc == -1.0) {
    Expr rest = out.size() == 1 ? out.front() : mul(std::move(out));
    return rest.kind() == Kind::Neg ? rest.arg(0) : neg(rest);
  }
  if (acc != 1.0) out.insert(out.begin(), constant(acc));
  if (out.size() == 1) return out.front();
  return mul(std::move(out));
}

inline double fold_unary(Kind k, double v, bool& ok) {
  ok = true;
  switch (k) {
    case Kind::Exp: return std::exp(v);
    case Kind::Ln: ok = v > 0; return ok ? std::log(v) : 0.0;
    case Kind::Sqrt: ok = v >= 0; return ok ? std::sqrt(v) : 0.0;
    case Kind::Sin: return std::sin(v);
    case Kind::Cos: return std::cos(v);
    case Kind::Tan: return std::tan(v);
    default: ok = false; return 0.0;
  }
}

}  // namespace detail

/// Light algebraic cleanup: constant folding, +0, *1, *0, ^0, ^1, Add/Mul
/// flattening. Not a canonicalizer. x^0 and 0^0 fold to 1.
inline Expr simplify(const Expr& e) {
  const Node& n = e.node();
  if (n.args.empty()) return e;
  std::vector<Expr> args;
  args.reserve(n.args.size());
  for (const auto& a : n.args) args.push_back(simplify(a));

  switch (n.kind) {
    case Kind::Neg: {
      const Expr& a = args[0];
      if (a.is_constant()) return constant(-a.value());
      if (a.kind() == Kind::Neg) return a.arg(0);
      return neg(a);
    }
    case Kind::Add: {
      // Pull negated constants into the folded sum as well.
      for (auto& a : args)
        if (a.kind() == Kind::Neg && a.arg(0).is_constant()) a = constant(-a.arg(0).value());
      return detail::simplify_add(std::move(args));
    }
    case Kind::Mul:
      return detail::simplify_mul(std::move(args));
    case Kind::Div: {
      const Expr& a = args[0];
      const Expr& b = args[1];
      if (a.is_constant(0.0)) return constant(0.0);
      if (b.is_constant(1.0)) return a;
      if (a.is_constant() && b.is_constant() && b.value() != 0.0)
        return constant(a.value() / b.value());
      return div(a, b);
    }
    case Kind::Pow: {
      const Expr& b = args[0];
      const Expr& x = args[1];
      if (x.is_constant(0.0)) return constant(1.0);
      if (x.is_constant(1.0)) return b;
      if (b.is_constant(1.0)) return constant(1.0);
      if (b.is_constant() && x.is_constant()) {
        double v = std::pow(b.value(), x.value());
        if (detail::finite_const(v)) return constant(v);
      }
      return pow(b, x);
    }
    case Kind::Integral:
      if (args[0].is_constant(0.0)) return constant(0.0);
      return with_args(e, std::move(args));
    case Kind::Let:
      if (!depends_on(args[1], n.name)) return args[1];
      return with_args(e, std::move(args));
    default:
      if (is_unary_function(n.kind) && args[0].is_constant()) {
        bool ok = false;
        double v = detail::fold_unary(n.kind, args[0].value(), ok);
        if (ok && detail::finite_const(v)) return constant(v);
      }
      return with_args(e, std::move(args));
  }
}

// ---------------------------------------------------------------------------
// Differentiation

namespace detail {

struct DiffContext {
  std::string var;
  std::map<std::string, std::string> let_derivs;  // let name -> name of its derivative
};

inline Expr d(const Expr& e, const DiffContext& ctx);

inline Expr rename_binder(const Expr& e, const std::set<std::string>& avoid) {
  const Node& n = e.node();
  std::set<std::string> all = avoid;
  auto fv = free_variables(e);
  all.insert(fv.begin(), fv.end());
  std::string renamed = fresh_name(n.name, all);
  std::size_t body_idx = n.kind == Kind::Let ? 1 : 0;
  std::vector<Expr> args = n.args;
  args[body_idx] = substitute_impl(args[body_idx], Bindings{{n.name, variable(renamed)}});
  return with_name(with_args(e, std::move(args)), renamed);
}

inline bool binder_clashes(const std::string& name, const DiffContext& ctx) {
  if (name == ctx.var) return true;
  for (const auto& [k, v] : ctx.let_derivs)
    if (k == name || v == name) return true;
  return false;
}

inline std::set<std::string> ctx_names(const DiffContext& ctx) {
  std::set<std::string> s{ctx.var};
  for (const auto& [k, v] : ctx.let_derivs) {
    s.insert(k);
    s.insert(v);
  }
  return s;
}

inline Expr d(const Expr& e, const DiffContext& ctx) {
  const Node& n = e.node();
  switch (n.kind) {
    case Kind::Constant:
    case Kind::BasePoint:
      return constant(0.0);
    case Kind::Variable:
    case Kind::Parameter: {
      if (n.name == ctx.var) return constant(1.0);
      auto it = ctx.let_derivs.find(n.name);
      if (it != ctx.let_derivs.end()) return variable(it->second);
      return constant(0.0);
    }
    case Kind::FuncApp: {
      std::vector<Expr> terms;
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        Expr da = simplify(d(n.args[i], ctx));
        if (da.is_constant(0.0)) continue;
        std::vector<int> orders = n.orders;
        ++orders[i];
        Expr partial = func_app(n.name, n.args, std::move(orders));
        terms.push_back(da.is_constant(1.0) ? partial : mul({partial, da}));
      }
      return simplify_add(std::move(terms));
    }
    case Kind::Neg:
      return simplify(neg(d(n.args[0], ctx)));
    case Kind::Add: {
      std::vector<Expr> terms;
      for (const auto& a : n.args) terms.push_back(d(a, ctx));
      return simplify_add(std::move(terms));
    }
    case Kind::Mul: {
      std::vector<Expr> terms;
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        Expr di = d(n.args[i], ctx);
        if (di.is_constant(0.0)) continue;
        std::vector<Expr> factors;
        for (std::size_t j = 0; j < n.args.size(); ++j) factors.push_back(j == i ? di : n.args[j]);
        terms.push_back(simplify_mul(std::move(factors)));
      }
      return simplify_add(std::move(terms));
    }
    case Kind::Div: {
      const Expr& a = n.args[0];
      const Expr& b = n.args[1];
      Expr da = d(a, ctx);
      Expr db = d(b, ctx);
      std::vector<Expr> terms;
      if (!da.is_constant(0.0)) terms.push_back(simplify(div(da, b)));
      if (!db.is_constant(0.0))
        terms.push_back(simplify(neg(div(simplify_mul({a, db}), pow(b, constant(2.0))))));
      return simplify_add(std::move(terms));
    }
    case Kind::Pow: {
      const Expr& b = n.args[0];
      const Expr& x = n.args[1];
      Expr db = d(b, ctx);
      Expr dx = d(x, ctx);
      std::vector<Expr> terms;
      if (!db.is_constant(0.0)) {
        Expr reduced = x.is_constant() ? constant(x.value() - 1.0) : simplify(add({x, constant(-1.0)}));
        terms.push_back(simplify_mul({x, simplify(pow(b, reduced)), db}));
      }
      if (!dx.is_constant(0.0)) terms.push_back(simplify_mul({e, ln(b), dx}));
      return simplify_add(std::move(terms));
    }
    case Kind::Exp: {
      Expr du = d(n.args[0], ctx);
      if (du.is_constant(0.0)) return du;
      return simplify_mul({e, du});
    }
    case Kind::Ln: {
      Expr du = d(n.args[0], ctx);
      if (du.is_constant(0.0)) return du;
      return simplify(div(du, n.args[0]));
    }
    case Kind::Sqrt: {
      Expr du = d(n.args[0], ctx);
      if (du.is_constant(0.0)) return du;
      return simplify(div(du, mul({constant(2.0), e})));
    }
    case Kind::Sin: {
      Expr du = d(n.args[0], ctx);
      if (du.is_constant(0.0)) return du;
      return simplify_mul({cos(n.args[0]), du});
    }
    case Kind::Cos: {
      Expr du = d(n.args[0], ctx);
      if (du.is_constant(0.0)) return du;
      return simplify(neg(simplify_mul({sin(n.args[0]), du})));
    }
    case Kind::Tan: {
      Expr du = d(n.args[0], ctx);
      if (du.is_constant(0.0)) return du;
      return simplify_mul({add({constant(1.0), pow(e, constant(2.0))}), du});
    }
    case Kind::Integral: {
      if (binder_clashes(n.name, ctx)) return d(rename_binder(e, ctx_names(ctx)), ctx);
      const Expr& g = n.args[0];
      const Expr& lo = n.args[1];
      const Expr& hi = n.args[2];
      std::vector<Expr> terms;
      Expr dhi = d(hi, ctx);
      if (!dhi.is_constant(0.0))
        terms.push_back(simplify_mul({substitute_impl(g, Bindings{{n.name, hi}}), dhi}));
      if (lo.kind() != Kind::BasePoint) {
        Expr dlo = d(lo, ctx);
        if (!dlo.is_constant(0.0))
          terms.push_back(simplify(neg(simplify_mul({substitute_impl(g, Bindings{{n.name, lo}}), dlo}))));
      }
      Expr dg = d(g, ctx);
      if (!dg.is_constant(0.0)) terms.push_back(integral(n.name, dg, lo, hi));
      return simplify_add(std::move(terms));
    }
    case Kind::RootOf: {
      if (binder_clashes(n.name, ctx)) return d(rename_binder(e, ctx_names(ctx)), ctx);
      const Expr& phi = n.args[0];
      Expr dphi_v = d(phi, ctx);
      if (dphi_v.is_constant(0.0)) return dphi_v;
      DiffContext zctx{n.name, {}};
      Expr dphi_z = d(phi, zctx);
      Bindings at_root{{n.name, e}};
      return simplify(neg(div(substitute_impl(dphi_v, at_root), substitute_impl(dphi_z, at_root))));
    }
    case Kind::Let: {
      if (binder_clashes(n.name, ctx)) return d(rename_binder(e, ctx_names(ctx)), ctx);
      const Expr& bound = n.args[0];
      const Expr& body = n.args[1];
      Expr dbound = d(bound, ctx);
      if (dbound.is_constant(0.0)) return simplify(let(n.name, bound, d(body, ctx)));
      std::set<std::string> avoid = ctx_names(ctx);
      auto fv = free_variables(e);
      avoid.insert(fv.begin(), fv.end());
      std::set<std::string> binders;
      collect_binders(e, binders);
      avoid.insert(binders.begin(), binders.end());
      std::string dname = fresh_name(n.name + "_d" + ctx.var, avoid);
      DiffContext inner = ctx;
      inner.let_derivs[n.name] = dname;
      Expr dbody = d(body, inner);
      return simplify(let(n.name, bound, let(dname, dbound, dbody)));
    }
  }
  return constant(0.0);
}

}  // namespace detail

/// Exact partial derivative with respect to the free name `v`. Integrals
/// follow the Leibniz rule; RootOf nodes the implicit function theorem.
inline Expr differentiate(const Expr& e, const std::string& v) {
  return detail::d(e, detail::DiffContext{v, {}});
}

}  // namespace pdegensol
