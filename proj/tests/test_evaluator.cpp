#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"

using namespace pdegensol;
using testing_support::env;

namespace {

const Environment kEnv = env({"t", "x"}, {"a", "b"}, {{"F", 1}, {"G", 1}, {"K", 2}});

double scalar(const std::string& text, double t, double x) {
  Evaluator ev;
  ev.bind_parameter("a", 1.5);
  ev.bind_parameter("b", -0.5);
  ev.set_point({{"t", t}, {"x", x}});
  return ev.eval_scalar(parse(text, kEnv));
}

}  // namespace

TEST(Evaluator, Arithmetic) {
  EXPECT_NEAR(scalar("a*t^2 + b/x - exp(t)", 0.5, 2.0), 1.5 * 0.25 - 0.25 - std::exp(0.5), 1e-14);
  EXPECT_NEAR(scalar("sqrt(x)*ln(x) + tan(t)*cos(t) - sin(t)", 0.4, 3.0), std::sqrt(3.0) * std::log(3.0), 1e-14);
  EXPECT_NEAR(scalar("x^(1/2) - sqrt(x)", 0.0, 2.0), 0.0, 1e-15);
  EXPECT_NEAR(scalar("(-x)^3", 0.0, 2.0), -8.0, 1e-14);
}

TEST(Evaluator, DomainGuards) {
  EXPECT_THROW(scalar("ln(x - 2)", 0.0, 1.0), DomainError);
  EXPECT_THROW(scalar("sqrt(t)", -0.1, 1.0), DomainError);
  EXPECT_THROW(scalar("1/(x - 1)", 0.0, 1.0), DomainError);
  EXPECT_THROW(scalar("tan(t)", std::numbers::pi / 2 + 1e-4, 0.0), DomainError);
  EXPECT_THROW(scalar("tan(t)", -std::numbers::pi / 2, 0.0), DomainError);
  EXPECT_THROW(scalar("exp(1000*x)", 0.0, 1.0), DomainError);
  EXPECT_THROW(scalar("x^(1/2)", 0.0, -1.0), DomainError);
  EXPECT_NO_THROW(scalar("tan(t)", std::numbers::pi / 2 - 0.01, 0.0));
  EXPECT_NO_THROW(scalar("1/(x - 1)", 0.0, 1.0 + 1e-6));
}

TEST(Evaluator, MonitorRecordsClosestApproach) {
  Evaluator ev;
  GuardMonitor mon;
  ev.set_monitor(&mon);
  const Expr e = parse("1/(x - 1) + ln(t) + tan(t)", kEnv);
  for (double x : {1.5, 1.2, 2.0}) {
    ev.set_point({{"t", 0.3}, {"x", x}});
    ev.eval_scalar(e);
  }
  EXPECT_NEAR(mon.min_denominator, 0.2, 1e-14);
  EXPECT_NEAR(mon.min_radicand, 0.3, 1e-14);
  EXPECT_NEAR(mon.min_tan_margin, std::cos(0.3), 1e-14);
  EXPECT_NEAR(mon.worst(), 0.2, 1e-14);
}

TEST(Evaluator, LetBindsWithinBody) {
  EXPECT_NEAR(scalar("let(u, t + x, u^2 + u)", 1.0, 2.0), 12.0, 1e-14);
  // the bound name shadows nothing outside its body
  EXPECT_NEAR(scalar("let(u, 2*x, u) + let(u, t, u)", 1.0, 2.0), 5.0, 1e-14);

  Evaluator ev;
  auto set = IndexSet::total_degree(2, 2);
  ev.set_point(set, {{"t", 0.5}, {"x", 0.25}});
  Jet j = ev.eval(parse("let(u, t*x, exp(u))", kEnv));
  EXPECT_NEAR(j.partial(MultiIndex{1, 1}), std::exp(0.125) * (1 + 0.125), 1e-13);
}

TEST(Evaluator, BasePointKeys) {
  Evaluator ev;
  ev.set_base_point("x", 0.5);
  ev.set_base_point("t", -1.0);
  ev.set_point({{"t", 1.0}, {"x", 2.0}});
  EXPECT_NEAR(ev.eval_scalar(parse("int(xi, base, x, 1)", kEnv)), 1.5, 1e-13);
  EXPECT_NEAR(ev.eval_scalar(parse("int(tau, base, t, 1)", kEnv)), 2.0, 1e-13);
  EXPECT_NEAR(ev.eval_scalar(parse("int(s, base[t], x, 1)", kEnv)), 3.0, 1e-13);

  Evaluator missing;
  missing.set_point({{"t", 1.0}, {"x", 2.0}});
  EXPECT_THROW(missing.eval_scalar(parse("int(xi, base, x, 1)", kEnv)), std::invalid_argument);
}

TEST(Evaluator, UnboundNames) {
  Evaluator ev;
  ev.set_point({{"t", 1.0}});
  EXPECT_THROW(ev.eval_scalar(parse("x + t", kEnv)), std::invalid_argument);
  EXPECT_THROW(ev.eval_scalar(parse("a*t", kEnv)), std::invalid_argument);
  EXPECT_ANY_THROW(ev.eval_scalar(parse("F(t)", kEnv)));
}

TEST(Evaluator, BoundFunctionsAndDerivatives) {
  Evaluator ev;
  ev.bind_function("F", testing_support::poly({1.0, 0.0, 2.0, -1.0}, 0.5));  // 1.5 + 2t^2 - t^3
  ev.bind_function("K", FunctionInstance::polynomial(2, 2, {0.0, 1.0, 2.0, 3.0, 4.0, 5.0}, 0.0));
  auto set = IndexSet::total_degree(2, 2);
  const double t = 0.7, x = -0.4;
  ev.set_point(set, {{"t", t}, {"x", x}});

  EXPECT_NEAR(ev.eval(parse("F(t)", kEnv)).value(), 1.5 + 2 * t * t - t * t * t, 1e-14);
  EXPECT_NEAR(ev.eval(parse("deriv(F, 1)(t)", kEnv)).value(), 4 * t - 3 * t * t, 1e-14);
  EXPECT_NEAR(ev.eval(parse("deriv(F, 2)(t)", kEnv)).value(), 4 - 6 * t, 1e-14);
  Jet chained = ev.eval(parse("F(t*x)", kEnv));
  const double u = t * x;
  EXPECT_NEAR(chained.partial(MultiIndex{1, 0}), (4 * u - 3 * u * u) * x, 1e-13);
  EXPECT_NEAR(chained.partial(MultiIndex{1, 1}), (4 - 6 * u) * u + (4 * u - 3 * u * u), 1e-13);

  // Composition versus the same function evaluated point by point.
  const Expr k = parse("K(t + x, t*x)", kEnv);
  Jet jk = ev.eval(k);
  Evaluator sc;
  sc.bind_function("K", FunctionInstance::polynomial(2, 2, {0.0, 1.0, 2.0, 3.0, 4.0, 5.0}, 0.0));
  testing_support::Scalar g = [&](const testing_support::Point& p) {
    sc.set_point(testing_support::at({"t", "x"}, p));
    return sc.eval_scalar(k);
  };
  for (std::vector<int> a : {std::vector<int>{1, 0}, {0, 1}, {1, 1}, {2, 0}}) {
    double fd = testing_support::fd_partial(g, {t, x}, a, 1e-3);
    MultiIndex idx{static_cast<std::uint8_t>(a[0]), static_cast<std::uint8_t>(a[1])};
    EXPECT_LE(testing_support::rel_diff(jk.partial(idx), fd), 1e-8);
  }
}

TEST(Evaluator, OverridesReplaceUnknownValues) {
  Evaluator ev;
  ev.override_function("F", {0}, 3.0);
  ev.override_function("F", {1}, -2.0);
  ev.set_point({{"t", 0.1}, {"x", 0.2}});
  EXPECT_NEAR(ev.eval_scalar(parse("F(t) + deriv(F, 1)(t)", kEnv)), 1.0, 1e-15);
  ev.clear_overrides();
  EXPECT_ANY_THROW(ev.eval_scalar(parse("F(t)", kEnv)));
}

TEST(Evaluator, ScalarEvaluationLeavesJetPointIntact) {
  Evaluator ev;
  auto set = IndexSet::total_degree(2, 1);
  ev.set_point(set, {{"t", 2.0}, {"x", 3.0}});
  const Expr e = parse("t*x", kEnv);
  EXPECT_EQ(ev.eval_scalar(e), 6.0);
  Jet j = ev.eval(e);
  EXPECT_EQ(j.partial(MultiIndex{1, 0}), 3.0);
  EXPECT_EQ(j.partial(MultiIndex{0, 1}), 2.0);
}
