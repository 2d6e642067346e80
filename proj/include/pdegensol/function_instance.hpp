#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdegensol/jet.hpp"

namespace pdegensol {

/// Concrete stand-in for an arbitrary function: a polynomial of total degree
/// `degree` in `arity` arguments plus a constant offset, optionally with a
/// sinusoid in the first argument. Every partial derivative is analytic.
struct FunctionInstance {
  enum class Kind { Polynomial, PolynomialSinusoid };

  Kind kind = Kind::Polynomial;
  std::size_t arity = 1;
  int degree = 0;
  std::vector<double> coefficients;  // one per monomial, see monomials()
  double offset = 0.0;
  double amplitude = 0.0;  // sinusoid: amplitude * sin(frequency * u0 + phase)
  double frequency = 0.0;
  double phase = 0.0;
  std::vector<MultiIndex> exponents;  // parallel to coefficients

  bool operator==(const FunctionInstance&) const = default;

  /// Monomial exponents in canonical order: by total degree, then
  /// lexicographically descending.
  static std::vector<MultiIndex> monomials(std::size_t arity, int degree) {
    if (arity == 0 || arity > kMaxVars) throw std::invalid_argument("unsupported function arity");
    std::vector<MultiIndex> out;
    for (int d = 0; d <= degree; ++d) collect(arity, 0, d, MultiIndex{}, out);
    return out;
  }

  static FunctionInstance polynomial(std::size_t arity, int degree, std::vector<double> coeffs, double offset) {
    FunctionInstance f;
    f.arity = arity;
    f.degree = degree;
    f.coefficients = std::move(coeffs);
    f.offset = offset;
    f.exponents = monomials(arity, degree);
    if (f.coefficients.size() != f.exponents.size())
      throw std::invalid_argument("coefficient count does not match degree/arity");
    return f;
  }

  /// d^gamma F at `u` (gamma over the arguments).
  double partial(std::span<const double> u, const MultiIndex& gamma) const {
    double total = 0.0;
    const auto& mons = exponents;
    for (std::size_t m = 0; m < mons.size(); ++m) {
      double term = coefficients[m];
      if (term == 0.0) continue;
      for (std::size_t i = 0; i < arity && term != 0.0; ++i) {
        int e = mons[m][i];
        int g = gamma[i];
        if (g > e) {
          term = 0.0;
          break;
        }
        for (int k = 0; k < g; ++k) term *= e - k;
        term *= ipow(u[i], e - g);
      }
      total += term;
    }
    bool zero_gamma = total_order(gamma) == 0;
    if (zero_gamma) total += offset;
    if (kind == Kind::PolynomialSinusoid) {
      bool only_first = true;
      for (std::size_t i = 1; i < kMaxVars; ++i) only_first &= gamma[i] == 0;
      if (only_first) {
        int k = gamma[0];
        total += amplitude * std::pow(frequency, k) *
                 std::sin(frequency * u[0] + phase + k * std::numbers::pi / 2);
      }
    }
    return total;
  }

  double operator()(std::span<const double> u) const { return value(u); }

  /// F(u): direct evaluation.
  double value(std::span<const double> u) const {
    double total = offset;
    for (std::size_t m = 0; m < exponents.size(); ++m) {
      double term = coefficients[m];
      if (term == 0.0) continue;
      for (std::size_t i = 0; i < arity; ++i) term *= ipow(u[i], exponents[m][i]);
      total += term;
    }
    if (kind == Kind::PolynomialSinusoid) total += amplitude * std::sin(frequency * u[0] + phase);
    return total;
  }

  /// The partial d^gamma F as a function instance of the same form.
  FunctionInstance derivative(const MultiIndex& gamma) const {
    if (total_order(gamma) == 0) return *this;
    FunctionInstance d;
    d.arity = arity;
    d.degree = std::max(0, degree - total_order(gamma));
    for (std::size_t m = 0; m < exponents.size(); ++m) {
      double c = coefficients[m];
      MultiIndex e = exponents[m];
      for (std::size_t i = 0; i < arity && c != 0.0; ++i) {
        if (gamma[i] > e[i]) {
          c = 0.0;
          break;
        }
        for (int k = 0; k < gamma[i]; ++k) c *= e[i] - k;
        e[i] = static_cast<std::uint8_t>(e[i] - gamma[i]);
      }
      if (c == 0.0) continue;
      d.coefficients.push_back(c);
      d.exponents.push_back(e);
    }
    bool only_first = true;
    for (std::size_t i = 1; i < kMaxVars; ++i) only_first &= gamma[i] == 0;
    if (kind == Kind::PolynomialSinusoid && only_first) {
      const int k = gamma[0];
      d.kind = Kind::PolynomialSinusoid;
      d.amplitude = amplitude * std::pow(frequency, k);
      d.frequency = frequency;
      d.phase = phase + k * std::numbers::pi / 2;
    }
    return d;
  }

  /// F^{(orders)}(args) over the jets' index set, by evaluating the
  /// polynomial (and sinusoid) with truncated Taylor arithmetic.
  Jet apply(std::span<const Jet> args, std::span<const int> orders) const {
    if (args.size() != arity) throw std::invalid_argument("function instance arity mismatch");
    MultiIndex gamma{};
    for (std::size_t i = 0; i < arity && i < orders.size(); ++i) gamma[i] = static_cast<std::uint8_t>(orders[i]);
    if (total_order(gamma) > 0) return derivative(gamma).apply(args, {});
    return apply(args);
  }

  Jet apply(std::span<const Jet> args) const {
    if (args.size() != arity) throw std::invalid_argument("function instance arity mismatch");
    const IndexSet* set = &IndexSet::scalar();
    for (const auto& a : args)
      if (!a.is_scalar()) set = &a.set();
    std::array<double, kMaxVars> u{};
    for (std::size_t i = 0; i < arity; ++i) u[i] = args[i].value();
    if (set->size() == 1) return Jet(*set, value(std::span<const double>(u.data(), arity)));

    std::array<int, kMaxVars> top{};
    for (const auto& e : exponents)
      for (std::size_t i = 0; i < arity; ++i) top[i] = std::max(top[i], static_cast<int>(e[i]));
    std::array<std::vector<Jet>, kMaxVars> powers;
    for (std::size_t i = 0; i < arity; ++i) {
      Jet a = args[i].promote(*set);
      powers[i].reserve(static_cast<std::size_t>(top[i]) + 1);
      powers[i].emplace_back(*set, 1.0);
      for (int k = 1; k <= top[i]; ++k) powers[i].push_back(powers[i].back() * a);
    }
    Jet result(*set, offset);
    for (std::size_t m = 0; m < exponents.size(); ++m) {
      if (coefficients[m] == 0.0) continue;
      Jet term(*set, coefficients[m]);
      bool first = true;
      for (std::size_t i = 0; i < arity; ++i) {
        int e = exponents[m][i];
        if (!e) continue;
        if (first) {
          term = powers[i][static_cast<std::size_t>(e)] * coefficients[m];
          first = false;
        } else {
          term = term * powers[i][static_cast<std::size_t>(e)];
        }
      }
      result += term;
    }
    if (kind == Kind::PolynomialSinusoid) {
      Jet arg = args[0].promote(*set) * frequency;
      arg += phase;
      result += pdegensol::sin(arg) * amplitude;
    }
    return result;
  }

 private:
  static double ipow(double x, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
  }

  static void collect(std::size_t arity, std::size_t pos, int remaining, MultiIndex cur, std::vector<MultiIndex>& out) {
    if (pos + 1 == arity) {
      cur[pos] = static_cast<std::uint8_t>(remaining);
      out.push_back(cur);
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      cur[pos] = static_cast<std::uint8_t>(k);
      collect(arity, pos + 1, remaining - k, cur, out);
    }
  }
};

}  // namespace pdegensol
