#pragma once

#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdegensol/errors.hpp"
#include "pdegensol/expr.hpp"

namespace pdegensol {

/// Names an expression may reference. Dummies introduced by int/rootof/let
/// are scoped by the parser itself and need not be declared.
struct Environment {
  std::vector<std::string> variables;
  std::vector<std::string> parameters;
  std::map<std::string, std::size_t> functions;  // name -> arity

  // Unknown function of the PDE (conventionally w). `w` alone means
  // w(vars...), `w_tx` the mixed partial, `w_14` the partial in the first
  // and fourth variable.
  std::string unknown;
  std::vector<std::string> unknown_vars;

  bool is_variable(std::string_view n) const { return contains(variables, n); }
  bool is_parameter(std::string_view n) const { return contains(parameters, n); }

 private:
  static bool contains(const std::vector<std::string>& v, std::string_view n) {
    for (const auto& s : v)
      if (s == n) return true;
    return false;
  }
};

namespace detail {

class Parser {
 public:
  Parser(std::string_view text, const Environment& env) : text_(text), env_(env) {}

  Expr parse_all() {
    Expr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  std::string_view text_;
  const Environment& env_;
  std::size_t pos_ = 0;
  std::vector<std::string> bound_;

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  bool accept(char c) {
    if (peek(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  bool peek_ident() {
    skip_ws();
    return pos_ < text_.size() &&
           (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_');
  }

  std::string ident() {
    skip_ws();
    if (!peek_ident()) fail("expected identifier");
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  int integer() {
    skip_ws();
    int v = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (ec != std::errc()) fail("expected integer");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return v;
  }

  double number() {
    skip_ws();
    double v = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (ec != std::errc()) fail("malformed number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return v;
  }

  bool is_bound(const std::string& n) const {
    for (auto it = bound_.rbegin(); it != bound_.rend(); ++it)
      if (*it == n) return true;
    return false;
  }

  Expr parse_expr() {
    std::vector<Expr> terms{parse_term()};
    while (true) {
      if (accept('+')) {
        terms.push_back(parse_term());
      } else if (peek('-')) {
        ++pos_;
        terms.push_back(neg(parse_term()));
      } else {
        break;
      }
    }
    if (terms.size() == 1) return terms.front();
    return add(std::move(terms));
  }

  Expr parse_term() {
    Expr acc = parse_unary();
    while (true) {
      if (accept('*')) {
        Expr rhs = parse_unary();
        if (acc.kind() == Kind::Mul) {
          auto factors = acc.args();
          factors.push_back(std::move(rhs));
          acc = mul(std::move(factors));
        } else {
          acc = mul({acc, std::move(rhs)});
        }
      } else if (accept('/')) {
        acc = div(acc, parse_unary());
      } else {
        return acc;
      }
    }
  }

  Expr parse_unary() {
    if (accept('-')) {
      Expr inner = parse_unary();
      if (inner.is_constant()) return constant(-inner.value());
      return neg(std::move(inner));
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_atom();
    if (accept('^')) return pow(std::move(base), parse_unary());
    return base;
  }

  std::vector<Expr> parse_call_args() {
    std::vector<Expr> args;
    expect('(');
    if (accept(')')) return args;
    do {
      args.push_back(parse_expr());
    } while (accept(','));
    expect(')');
    return args;
  }

  Expr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return constant(number());
    if (accept('(')) {
      Expr e = parse_expr();
      expect(')');
      return e;
    }
    if (!peek_ident()) fail(std::string("unexpected character '") + c + "'");

    std::size_t start = pos_;
    std::string name = ident();

    if (name == "int" && peek('(')) return parse_integral();
    if (name == "rootof" && peek('(')) return parse_rootof();
    if (name == "let" && peek('(')) return parse_let();
    if (name == "deriv" && peek('(')) return parse_deriv(start);
    if (name == "base") fail("'base' is only valid as an integral lower limit");

    static constexpr std::pair<const char*, Kind> kUnary[] = {
        {"exp", Kind::Exp}, {"ln", Kind::Ln},   {"sqrt", Kind::Sqrt},
        {"sin", Kind::Sin}, {"cos", Kind::Cos}, {"tan", Kind::Tan}};
    for (auto [fname, kind] : kUnary) {
      if (name == fname && peek('(')) {
        auto args = parse_call_args();
        if (args.size() != 1) throw ArityMismatch(name, 1, args.size(), start);
        return unary(kind, std::move(args[0]));
      }
    }

    if (is_bound(name)) return variable(name);

    if (!env_.unknown.empty()) {
      if (name == env_.unknown) {
        if (peek('(')) {
          auto args = parse_call_args();
          if (args.size() != env_.unknown_vars.size())
            throw ArityMismatch(name, env_.unknown_vars.size(), args.size(), start);
          return func_app(name, std::move(args));
        }
        return unknown_partial({}, start);
      }
      if (name.size() > env_.unknown.size() + 1 && name.compare(0, env_.unknown.size(), env_.unknown) == 0 &&
          name[env_.unknown.size()] == '_') {
        if (auto e = try_unknown_partial(name.substr(env_.unknown.size() + 1), start)) return *e;
      }
    }

    if (auto it = env_.functions.find(name); it != env_.functions.end()) {
      if (!peek('(')) fail("function '" + name + "' used without arguments");
      auto args = parse_call_args();
      if (args.size() != it->second) throw ArityMismatch(name, it->second, args.size(), start);
      return func_app(name, std::move(args));
    }
    if (env_.is_variable(name)) return variable(name);
    if (env_.is_parameter(name)) return parameter(name);
    throw UnknownIdentifier(name, start);
  }

  std::optional<Expr> try_unknown_partial(const std::string& suffix, std::size_t start) {
    std::vector<int> orders(env_.unknown_vars.size(), 0);
    for (char ch : suffix) {
      std::size_t idx = env_.unknown_vars.size();
      if (std::isdigit(static_cast<unsigned char>(ch))) {
        idx = static_cast<std::size_t>(ch - '1');
      } else {
        for (std::size_t i = 0; i < env_.unknown_vars.size(); ++i)
          if (env_.unknown_vars[i].size() == 1 && env_.unknown_vars[i][0] == ch) idx = i;
      }
      if (idx >= env_.unknown_vars.size()) return std::nullopt;
      ++orders[idx];
    }
    return unknown_partial(std::move(orders), start);
  }

  Expr unknown_partial(std::vector<int> orders, std::size_t) {
    std::vector<Expr> args;
    for (const auto& v : env_.unknown_vars) args.push_back(variable(v));
    return func_app(env_.unknown, std::move(args), std::move(orders));
  }

  // deriv(F, k1, ..., kn)(a1, ..., an)
  Expr parse_deriv(std::size_t start) {
    expect('(');
    std::string fname = ident();
    std::vector<int> orders;
    while (accept(',')) orders.push_back(integer());
    expect(')');
    std::size_t arity = 0;
    if (fname == env_.unknown && !env_.unknown.empty()) {
      arity = env_.unknown_vars.size();
    } else if (auto it = env_.functions.find(fname); it != env_.functions.end()) {
      arity = it->second;
    } else {
      throw UnknownIdentifier(fname, start);
    }
    if (orders.size() != arity) throw ArityMismatch(fname, arity, orders.size(), start);
    for (int o : orders)
      if (o < 0) fail("negative derivative order");
    auto args = parse_call_args();
    if (args.size() != arity) throw ArityMismatch(fname, arity, args.size(), start);
    return func_app(fname, std::move(args), std::move(orders));
  }

  // int(dummy, lower|base|base[key], upper, integrand)
  Expr parse_integral() {
    expect('(');
    std::string dummy = ident();
    expect(',');
    Expr lower;
    std::optional<std::string> base_key;
    bool is_base = false;
    {
      std::size_t save = pos_;
      if (peek_ident()) {
        std::string w = ident();
        if (w == "base" && (peek(',') || peek('['))) {
          is_base = true;
          if (accept('[')) {
            base_key = ident();
            expect(']');
          }
        } else {
          pos_ = save;
        }
      }
    }
    if (!is_base) lower = parse_expr();
    expect(',');
    Expr upper = parse_expr();
    expect(',');
    bound_.push_back(dummy);
    Expr integrand = parse_expr();
    bound_.pop_back();
    expect(')');
    if (is_base) {
      std::string key = base_key ? *base_key
                        : (upper.kind() == Kind::Variable ? upper.name() : dummy);
      lower = base_point(std::move(key));
    }
    return integral(std::move(dummy), std::move(integrand), std::move(lower), std::move(upper));
  }

  // rootof(dummy, defining [, seed])
  Expr parse_rootof() {
    expect('(');
    std::string dummy = ident();
    expect(',');
    bound_.push_back(dummy);
    Expr defining = parse_expr();
    bound_.pop_back();
    Expr seed;
    if (accept(',')) seed = parse_expr();
    expect(')');
    return root_of(std::move(dummy), std::move(defining), std::move(seed));
  }

  // let(name, bound, body)
  Expr parse_let() {
    expect('(');
    std::string name = ident();
    expect(',');
    Expr bound = parse_expr();
    expect(',');
    bound_.push_back(name);
    Expr body = parse_expr();
    bound_.pop_back();
    expect(')');
    return let(std::move(name), std::move(bound), std::move(body));
  }
};

}  // namespace detail

/// Parse expression-language text against `env`.
/// Throws ParseError (or UnknownIdentifier / ArityMismatch) with the offset.
inline Expr parse(std::string_view text, const Environment& env) {
  return detail::Parser(text, env).parse_all();
}

}  // namespace pdegensol
