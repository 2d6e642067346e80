#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace pdegensol;
using testing_support::env;

namespace {

const Environment kEnv = env({"t", "x"});

const Expr* find_kind(const Expr& e, Kind k) {
  if (e.kind() == k) return &e;
  for (const auto& a : e.args())
    if (const Expr* r = find_kind(a, k)) return r;
  return nullptr;
}

}  // namespace

TEST(FindRoot, CubeRootOfEight) {
  NumericConfig cfg;
  auto r = find_root([](double z) { return z * z * z - 8; }, [](double z) { return 3 * z * z; }, 1.0, cfg);
  EXPECT_NEAR(r.root, 2.0, 1e-13);
  EXPECT_LE(r.residual, 1e-12);

  // As an expression: constant defining equation, so every partial vanishes.
  Evaluator ev;
  auto set = IndexSet::total_degree(2, 3);
  ev.set_point(set, {{"t", 0.3}, {"x", 0.9}});
  Jet j = ev.eval(parse("rootof(_Z, _Z^3 - 8, 1)", kEnv));
  EXPECT_NEAR(j.value(), 2.0, 1e-13);
  for (std::size_t i = 1; i < j.size(); ++i) EXPECT_EQ(j.coeff(i), 0.0);
}

TEST(FindRoot, ImplicitDerivativeOfSquareRoot) {
  Evaluator ev;
  auto set = IndexSet::total_degree(2, 3);
  ev.set_point(set, {{"t", 0.0}, {"x", 4.0}});
  Jet j = ev.eval(parse("rootof(_Z, _Z^2 - x, 1)", kEnv));
  EXPECT_NEAR(j.value(), 2.0, 1e-12);
  EXPECT_NEAR(j.partial(MultiIndex{0, 1}), 0.25, 1e-12);
  EXPECT_NEAR(j.partial(MultiIndex{0, 2}), -1.0 / 32, 1e-12);  // -x^{-3/2}/4
  EXPECT_NEAR(j.partial(MultiIndex{0, 3}), 3.0 / 256, 1e-12);  // 3/8 x^{-5/2}
  EXPECT_EQ(j.partial(MultiIndex{1, 0}), 0.0);
}

TEST(FindRoot, BranchFollowsSeed) {
  Evaluator ev;
  ev.set_point({{"t", 0.0}, {"x", 4.0}});
  EXPECT_NEAR(ev.eval_scalar(parse("rootof(_Z, _Z^2 - x, -1)", kEnv)), -2.0, 1e-12);
  EXPECT_NEAR(ev.eval_scalar(parse("rootof(_Z, _Z^2 - x, 1)", kEnv)), 2.0, 1e-12);

  Evaluator mirrored;
  mirrored.set_seed_sign(-1.0);
  mirrored.set_point({{"t", 0.0}, {"x", 4.0}});
  EXPECT_NEAR(mirrored.eval_scalar(parse("rootof(_Z, _Z^2 - x, 1)", kEnv)), -2.0, 1e-12);
}

TEST(FindRoot, ContinuationStaysOnBranch) {
  Evaluator ev;
  const Expr z = parse("rootof(_Z, _Z^2 - x, 1)", kEnv);
  for (double x = 4.0; x > 0.05; x *= 0.8) {
    ev.set_point({{"t", 0.0}, {"x", x}});
    EXPECT_NEAR(ev.eval_scalar(z), std::sqrt(x), 1e-12) << x;
  }
  EXPECT_LE(ev.stats().max_root_residual, 1e-12);
  EXPECT_GT(ev.stats().root_solves, 0);
}

TEST(FindRoot, Failures) {
  NumericConfig cfg;
  EXPECT_THROW(find_root([](double z) { return z * z + 1; }, [](double z) { return 2 * z; }, 0.0, cfg), RootNotFound);
  Evaluator ev;
  ev.set_point({{"t", 0.0}, {"x", 0.0}});
  EXPECT_THROW(ev.eval_scalar(parse("rootof(_Z, _Z^3 - x, 0)", kEnv)), DegenerateRoot);
  ev.set_point({{"t", 0.0}, {"x", -1.0}});
  EXPECT_THROW(ev.eval_scalar(parse("rootof(_Z, _Z^2 - x, 1)", kEnv)), RootNotFound);
}

TEST(FindRoot, ResidualBoundOnCatalogRoots) {
  for (const char* id : {"3.7", "3.8", "3.10", "5.2", "5.3"}) {
    SCOPED_TRACE(id);
    const auto& fam = get_family(id);
    const Scenario s = sample_scenario(fam, 2);
    Evaluator ev = make_evaluator(fam, s);
    auto rng = detail::make_rng(fam.id, 2, 5);
    for (int i = 0; i < 5; ++i) {
      ev.set_point(detail::named_point(fam, detail::draw_point(s, rng)));
      ev.eval_scalar(fam.solution);
    }
    EXPECT_GT(ev.stats().root_solves, 0);
    EXPECT_LE(ev.stats().max_root_residual, 1e-12);
  }
}

TEST(FindRoot, ImplicitDerivativeMatchesFiniteDifferencesOnRootOfIntegral) {
  // The RootOf whose defining equation integrates up to _Z.
  const auto& fam = get_family("3.7");
  const Expr* found = find_kind(fam.solution, Kind::RootOf);
  ASSERT_NE(found, nullptr);
  ASSERT_NE(find_kind(found->arg(0), Kind::Integral), nullptr);
  // Inside the solution it is integrated over eta; pin eta to x to get z(t, x).
  const Expr z_expr = substitute(*found, {{"eta", variable("x")}});
  const Expr* root = &z_expr;

  const Scenario s = sample_scenario(fam, 1);
  auto set = IndexSet::total_degree(2, 2);
  Evaluator ev = make_evaluator(fam, s);
  const testing_support::Point p{0.5 * (s.box[0].first + s.box[0].second), 0.5 * (s.box[1].first + s.box[1].second)};
  ev.set_point(set, detail::named_point(fam, p));
  Jet z = ev.eval(*root);

  NumericConfig tight;
  tight.quad_rel_tol = 1e-13;
  tight.quad_abs_tol = 1e-15;
  tight.root_tol = 1e-14;
  Evaluator scalar = make_evaluator(fam, s, tight);
  testing_support::Scalar g = [&](const testing_support::Point& q) {
    scalar.set_point(detail::named_point(fam, q));
    return scalar.eval_scalar(*root);
  };
  for (std::vector<int> a : {std::vector<int>{1, 0}, {0, 1}}) {
    double fd = testing_support::fd_partial(g, p, a, 1e-3);
    MultiIndex idx{static_cast<std::uint8_t>(a[0]), static_cast<std::uint8_t>(a[1])};
    EXPECT_LE(testing_support::rel_diff(z.partial(idx), fd), 1e-6) << z.partial(idx) << " vs " << fd;
  }
}
