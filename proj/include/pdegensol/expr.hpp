#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pdegensol {

enum class Kind : std::uint8_t {
  Constant,
  Variable,
  Parameter,
  FuncApp,
  Neg,
  Add,
  Mul,
  Div,
  Pow,
  Exp,
  Ln,
  Sqrt,
  Sin,
  Cos,
  Tan,
  Integral,   // args: integrand, lower, upper; name: dummy
  BasePoint,  // name: base-point key (integration variable)
  RootOf,     // args: defining [, seed]; name: indeterminate
  Let,        // args: bound, body; name: bound name
};

inline bool is_unary_function(Kind k) {
  return k == Kind::Exp || k == Kind::Ln || k == Kind::Sqrt || k == Kind::Sin ||
         k == Kind::Cos || k == Kind::Tan;
}

inline const char* unary_function_name(Kind k) {
  switch (k) {
    case Kind::Exp: return "exp";
    case Kind::Ln: return "ln";
    case Kind::Sqrt: return "sqrt";
    case Kind::Sin: return "sin";
    case Kind::Cos: return "cos";
    case Kind::Tan: return "tan";
    default: return "";
  }
}

/// Process-wide symbol table. Nodes carry the interned id so evaluation
/// never compares strings.
inline int intern(std::string_view name) {
  static std::mutex mu;
  static std::unordered_map<std::string, int> table;
  std::lock_guard lock(mu);
  auto [it, inserted] = table.try_emplace(std::string(name), static_cast<int>(table.size()));
  return it->second;
}

class Expr;

struct Node {
  Kind kind = Kind::Constant;
  double value = 0.0;
  std::string name;
  int sym = -1;
  std::vector<int> orders;  // FuncApp: partial derivative order per argument
  std::vector<Expr> args;
};

/// Immutable, shared expression tree handle.
class Expr {
 public:
  Expr() = default;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  const Node& node() const { return *node_; }
  const Node* get() const { return node_.get(); }
  const Node* operator->() const { return node_.get(); }
  explicit operator bool() const { return static_cast<bool>(node_); }

  Kind kind() const { return node_->kind; }
  const std::string& name() const { return node_->name; }
  double value() const { return node_->value; }
  const std::vector<Expr>& args() const { return node_->args; }
  const Expr& arg(std::size_t i) const { return node_->args[i]; }

  bool is_constant() const { return node_ && node_->kind == Kind::Constant; }
  bool is_constant(double v) const { return is_constant() && node_->value == v; }

 private:
  std::shared_ptr<const Node> node_;
};

namespace detail {
inline Expr make(Kind kind, std::string name = {}, std::vector<Expr> args = {},
                 double value = 0.0, std::vector<int> orders = {}) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->value = value;
  if (!name.empty()) n->sym = intern(name);
  n->name = std::move(name);
  n->args = std::move(args);
  n->orders = std::move(orders);
  return Expr(std::move(n));
}
}  // namespace detail

// Builders. These do not simplify; see symbolic.hpp for that.
inline Expr constant(double v) { return detail::make(Kind::Constant, {}, {}, v); }
inline Expr variable(std::string name) { return detail::make(Kind::Variable, std::move(name)); }
inline Expr parameter(std::string name) { return detail::make(Kind::Parameter, std::move(name)); }

inline Expr func_app(std::string name, std::vector<Expr> args, std::vector<int> orders = {}) {
  if (orders.empty()) orders.assign(args.size(), 0);
  return detail::make(Kind::FuncApp, std::move(name), std::move(args), 0.0, std::move(orders));
}

inline Expr neg(Expr e) { return detail::make(Kind::Neg, {}, {std::move(e)}); }
inline Expr add(std::vector<Expr> terms) { return detail::make(Kind::Add, {}, std::move(terms)); }
inline Expr mul(std::vector<Expr> factors) { return detail::make(Kind::Mul, {}, std::move(factors)); }
inline Expr div(Expr num, Expr den) { return detail::make(Kind::Div, {}, {std::move(num), std::move(den)}); }
inline Expr pow(Expr base, Expr exponent) {
  return detail::make(Kind::Pow, {}, {std::move(base), std::move(exponent)});
}
inline Expr unary(Kind k, Expr e) { return detail::make(k, {}, {std::move(e)}); }
inline Expr exp(Expr e) { return unary(Kind::Exp, std::move(e)); }
inline Expr ln(Expr e) { return unary(Kind::Ln, std::move(e)); }
inline Expr sqrt(Expr e) { return unary(Kind::Sqrt, std::move(e)); }
inline Expr sin(Expr e) { return unary(Kind::Sin, std::move(e)); }
inline Expr cos(Expr e) { return unary(Kind::Cos, std::move(e)); }
inline Expr tan(Expr e) { return unary(Kind::Tan, std::move(e)); }

inline Expr base_point(std::string key) { return detail::make(Kind::BasePoint, std::move(key)); }

inline Expr integral(std::string dummy, Expr integrand, Expr lower, Expr upper) {
  return detail::make(Kind::Integral, std::move(dummy),
                      {std::move(integrand), std::move(lower), std::move(upper)});
}

/// `seed` may be empty: the root finder then starts from 0.
inline Expr root_of(std::string dummy, Expr defining, Expr seed = {}) {
  std::vector<Expr> args{std::move(defining)};
  if (seed) args.push_back(std::move(seed));
  return detail::make(Kind::RootOf, std::move(dummy), std::move(args));
}

inline Expr let(std::string name, Expr bound, Expr body) {
  return detail::make(Kind::Let, std::move(name), {std::move(bound), std::move(body)});
}

/// Rebuild `e` with new children, keeping every other field.
inline Expr with_args(const Expr& e, std::vector<Expr> args) {
  auto n = std::make_shared<Node>(e.node());
  n->args = std::move(args);
  return Expr(std::move(n));
}

inline Expr with_name(const Expr& e, std::string name) {
  auto n = std::make_shared<Node>(e.node());
  n->sym = intern(name);
  n->name = std::move(name);
  return Expr(std::move(n));
}

inline Expr operator+(Expr a, Expr b) { return add({std::move(a), std::move(b)}); }
inline Expr operator-(Expr a, Expr b) { return add({std::move(a), neg(std::move(b))}); }
inline Expr operator*(Expr a, Expr b) { return mul({std::move(a), std::move(b)}); }
inline Expr operator/(Expr a, Expr b) { return div(std::move(a), std::move(b)); }
inline Expr operator-(Expr a) { return neg(std::move(a)); }

inline bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.get() == b.get()) return true;
  if (!a || !b) return false;
  const Node& x = a.node();
  const Node& y = b.node();
  if (x.kind != y.kind || x.name != y.name || x.orders != y.orders ||
      x.args.size() != y.args.size())
    return false;
  if (x.kind == Kind::Constant && !(x.value == y.value)) return false;
  for (std::size_t i = 0; i < x.args.size(); ++i)
    if (!structurally_equal(x.args[i], y.args[i])) return false;
  return true;
}

inline bool operator==(const Expr& a, const Expr& b) { return structurally_equal(a, b); }

inline std::size_t node_count(const Expr& e) {
  std::size_t n = 1;
  for (const auto& c : e.args()) n += node_count(c);
  return n;
}

// ---------------------------------------------------------------------------
// Printing. Output is accepted by parse() and reproduces the tree up to
// Add/Mul flattening.

inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (v < 0) return "(" + s + ")";
  return s;
}

namespace detail {

inline bool is_atom(const Expr& e) {
  switch (e.kind()) {
    case Kind::Constant: return e.value() >= 0 || std::isnan(e.value());
    case Kind::Variable:
    case Kind::Parameter:
    case Kind::FuncApp:
    case Kind::Integral:
    case Kind::RootOf:
    case Kind::Let:
    case Kind::BasePoint:
      return true;
    default:
      return is_unary_function(e.kind());
  }
}

inline void print(const Expr& e, std::string& out);

inline void print_paren(const Expr& e, std::string& out, bool paren) {
  if (paren) out += '(';
  print(e, out);
  if (paren) out += ')';
}

inline void print(const Expr& e, std::string& out) {
  const Node& n = e.node();
  switch (n.kind) {
    case Kind::Constant:
      out += format_number(n.value);
      return;
    case Kind::Variable:
    case Kind::Parameter:
      out += n.name;
      return;
    case Kind::FuncApp: {
      bool has_deriv = false;
      for (int o : n.orders) has_deriv |= o != 0;
      if (has_deriv) {
        out += "deriv(" + n.name;
        for (int o : n.orders) out += ", " + std::to_string(o);
        out += ")";
      } else {
        out += n.name;
      }
      out += '(';
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += ", ";
        print(n.args[i], out);
      }
      out += ')';
      return;
    }
    case Kind::Neg: {
      out += '-';
      const Expr& c = n.args[0];
      print_paren(c, out, !is_atom(c) && c.kind() != Kind::Pow);
      return;
    }
    case Kind::Add:
      if (n.args.empty()) {
        out += "0";
        return;
      }
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        const Expr& c = n.args[i];
        if (i == 0) {
          print_paren(c, out, c.kind() == Kind::Add);
        } else if (c.kind() == Kind::Neg) {
          out += " - ";
          const Expr& inner = c.arg(0);
          print_paren(inner, out, inner.kind() == Kind::Add);
        } else {
          out += " + ";
          print_paren(c, out, c.kind() == Kind::Add);
        }
      }
      return;
    case Kind::Mul:
      if (n.args.empty()) {
        out += "1";
        return;
      }
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        const Expr& c = n.args[i];
        if (i) out += " * ";
        bool paren = c.kind() == Kind::Add || c.kind() == Kind::Neg || c.kind() == Kind::Mul ||
                     (i > 0 && c.kind() == Kind::Div);
        print_paren(c, out, paren);
      }
      return;
    case Kind::Div: {
      const Expr& a = n.args[0];
      const Expr& b = n.args[1];
      print_paren(a, out, a.kind() == Kind::Add || a.kind() == Kind::Neg);
      out += " / ";
      print_paren(b, out, !is_atom(b) && b.kind() != Kind::Pow);
      return;
    }
    case Kind::Pow:
      print_paren(n.args[0], out, !is_atom(n.args[0]));
      out += '^';
      print_paren(n.args[1], out, !is_atom(n.args[1]));
      return;
    case Kind::Integral:
      out += "int(" + n.name + ", ";
      print(n.args[1], out);
      out += ", ";
      print(n.args[2], out);
      out += ", ";
      print(n.args[0], out);
      out += ')';
      return;
    case Kind::BasePoint:
      out += "base[" + n.name + "]";
      return;
    case Kind::RootOf:
      out += "rootof(" + n.name + ", ";
      print(n.args[0], out);
      if (n.args.size() > 1) {
        out += ", ";
        print(n.args[1], out);
      }
      out += ')';
      return;
    case Kind::Let:
      out += "let(" + n.name + ", ";
      print(n.args[0], out);
      out += ", ";
      print(n.args[1], out);
      out += ')';
      return;
    default:
      out += unary_function_name(n.kind);
      out += '(';
      print(n.args[0], out);
      out += ')';
      return;
  }
}

}  // namespace detail

inline std::string to_string(const Expr& e) {
  std::string out;
  detail::print(e, out);
  return out;
}

}  // namespace pdegensol
