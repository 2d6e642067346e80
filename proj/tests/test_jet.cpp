#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "test_support.hpp"

using namespace pdegensol;

namespace {

MultiIndex mi(std::initializer_list<int> v) {
  MultiIndex a{};
  std::size_t i = 0;
  for (int x : v) a[i++] = static_cast<std::uint8_t>(x);
  return a;
}

double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

// Every beta <= alpha, componentwise.
void sub_indices(const MultiIndex& a, std::size_t pos, MultiIndex& b, std::vector<MultiIndex>& out) {
  if (pos == kMaxVars) {
    out.push_back(b);
    return;
  }
  for (int k = 0; k <= a[pos]; ++k) {
    b[pos] = static_cast<std::uint8_t>(k);
    sub_indices(a, pos + 1, b, out);
  }
  b[pos] = 0;
}

}  // namespace

TEST(Jet, ExpOfProductMixedPartial) {
  auto set = IndexSet::total_degree(2, 2);
  Jet x = Jet::variable(*set, 0, 1.0);
  Jet y = Jet::variable(*set, 1, 2.0);
  Jet f = exp(x * y);

  // Oracle: Richardson-extrapolated central differences.
  testing_support::Scalar g = [](const testing_support::Point& p) { return std::exp(p[0] * p[1]); };
  const double fd = testing_support::fd_partial(g, {1.0, 2.0}, {1, 1}, 1e-4);
  EXPECT_NEAR(f.partial(mi({1, 1})), fd, 1e-6 * std::abs(fd));

  const double e2 = std::exp(2.0);
  EXPECT_NEAR(f.value(), 7.38905609893065, 1e-12);
  EXPECT_NEAR(f.partial(mi({1, 1})), 3 * e2, 1e-12 * e2);
  EXPECT_NEAR(f.partial(mi({1, 0})), 2 * e2, 1e-12 * e2);
  EXPECT_NEAR(f.partial(mi({0, 2})), e2, 1e-12 * e2);
}

TEST(Jet, ProductRuleProperty) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (auto [nvars, order] : {std::pair<std::size_t, int>{2, 3}, {3, 2}, {1, 3}}) {
    auto set = IndexSet::total_degree(nvars, order);
    for (int trial = 0; trial < 20; ++trial) {
      Jet f(*set), g(*set);
      for (std::size_t i = 0; i < set->size(); ++i) {
        f.coeff(i) = u(rng);
        g.coeff(i) = u(rng);
      }
      Jet fg = f * g;
      for (const auto& a : set->indices()) {
        std::vector<MultiIndex> betas;
        MultiIndex b{};
        sub_indices(a, 0, b, betas);
        double want = 0.0, mag = 0.0;
        for (const auto& beta : betas) {
          MultiIndex rest{};
          double c = 1.0;
          for (std::size_t k = 0; k < kMaxVars; ++k) {
            rest[k] = static_cast<std::uint8_t>(a[k] - beta[k]);
            c *= binomial(a[k], beta[k]);
          }
          double term = c * f.partial(beta) * g.partial(rest);
          want += term;
          mag += std::abs(term);
        }
        EXPECT_NEAR(fg.partial(a), want, 1e-13 * std::max(1.0, mag));
      }
    }
  }
}

TEST(Jet, ClosureIsDownwardClosed) {
  std::vector<MultiIndex> gens{mi({1, 0, 0, 1}), mi({0, 0, 1, 1}), mi({2, 0, 0, 0})};
  auto set = IndexSet::closure(4, gens);
  for (const auto& a : set->indices()) {
    for (std::size_t v = 0; v < 4; ++v) {
      if (a[v] == 0) continue;
      MultiIndex below = a;
      --below[v];
      EXPECT_GE(set->find(below), 0);
    }
  }
  for (const auto& g : gens) EXPECT_GE(set->find(g), 0);
  EXPECT_LT(set->find(mi({1, 1, 0, 0})), 0);
  EXPECT_EQ(set->index(0), MultiIndex{});
}

TEST(Jet, ClosureProductMatchesFullJet) {
  // Truncating to a downward-closed subset keeps the retained coefficients exact.
  auto full = IndexSet::total_degree(2, 3);
  std::vector<MultiIndex> gens{mi({2, 1})};
  auto part = IndexSet::closure(2, gens);
  auto build = [](const IndexSet& s) {
    Jet t = Jet::variable(s, 0, 0.4), x = Jet::variable(s, 1, 0.9), one(s, 1.0);
    return sin(t * x) * exp(x) / (t + x * x) + sqrt(t + 2.0 * x) * log(x + one);
  };
  Jet a = build(*full), b = build(*part);
  for (const auto& idx : part->indices())
    EXPECT_NEAR(a.partial(idx), b.partial(idx), 1e-13 * (1 + std::abs(a.partial(idx))));
}

TEST(Jet, ElementaryFunctionsThirdOrder) {
  auto set = IndexSet::total_degree(1, 3);
  const double x0 = 0.7;
  Jet x = Jet::variable(*set, 0, x0);
  struct Case {
    Jet j;
    std::array<double, 4> d;
  };
  const double s = std::sin(x0), c = std::cos(x0), t = std::tan(x0), sec2 = 1 + t * t;
  std::vector<Case> cases{
      {exp(x), {std::exp(x0), std::exp(x0), std::exp(x0), std::exp(x0)}},
      {log(x), {std::log(x0), 1 / x0, -1 / (x0 * x0), 2 / (x0 * x0 * x0)}},
      {sqrt(x), {std::sqrt(x0), 0.5 / std::sqrt(x0), -0.25 * std::pow(x0, -1.5), 0.375 * std::pow(x0, -2.5)}},
      {sin(x), {s, c, -s, -c}},
      {cos(x), {c, -s, -c, s}},
      {tan(x), {t, sec2, 2 * t * sec2, 2 * sec2 * (sec2 + 2 * t * t)}},
      {pow(x, -1.5), {std::pow(x0, -1.5), -1.5 * std::pow(x0, -2.5), 3.75 * std::pow(x0, -3.5),
                      -13.125 * std::pow(x0, -4.5)}},
      {reciprocal(x), {1 / x0, -1 / (x0 * x0), 2 / std::pow(x0, 3), -6 / std::pow(x0, 4)}},
  };
  for (std::size_t k = 0; k < cases.size(); ++k) {
    SCOPED_TRACE(k);
    for (int n = 0; n <= 3; ++n) {
      double want = cases[k].d[static_cast<std::size_t>(n)];
      EXPECT_NEAR(cases[k].j.partial(mi({n})), want, 1e-12 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST(FunctionInstance, AnalyticDerivatives) {
  // 1 + 2u - u^2 + 0.5 u^3 plus 0.3 sin(2u + 0.1), offset 0.25
  FunctionInstance f = testing_support::poly({1.0, 2.0, -1.0, 0.5}, 0.25);
  f.kind = FunctionInstance::Kind::PolynomialSinusoid;
  f.amplitude = 0.3;
  f.frequency = 2.0;
  f.phase = 0.1;
  testing_support::Scalar g = [&](const testing_support::Point& p) {
    double u = p[0];
    return 1.25 + 2 * u - u * u + 0.5 * u * u * u + 0.3 * std::sin(2 * u + 0.1);
  };
  const double u0 = 0.6;
  const std::array<double, 1> at{u0};
  for (int n = 0; n <= 3; ++n) {
    double fd = testing_support::fd_partial(g, {u0}, {n}, 1e-2);
    EXPECT_NEAR(f.partial(at, mi({n})), fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
  EXPECT_DOUBLE_EQ(f.partial(at, mi({4})), 0.3 * 16 * std::sin(2 * u0 + 0.1));

  FunctionInstance h = FunctionInstance::polynomial(2, 2, {0.0, 1.0, 2.0, 3.0, 4.0, 5.0}, 0.5);
  const std::array<double, 2> p{0.3, -0.7};
  double value = 0.5;
  for (std::size_t m = 0; m < h.exponents.size(); ++m)
    value += h.coefficients[m] * std::pow(p[0], h.exponents[m][0]) * std::pow(p[1], h.exponents[m][1]);
  EXPECT_NEAR(h.partial(p, MultiIndex{}), value, 1e-14);
  EXPECT_EQ(h.partial(p, mi({3, 0})), 0.0);
}
