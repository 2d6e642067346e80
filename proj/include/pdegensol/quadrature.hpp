#pragma once

#include <array>
#include <cmath>
#include <utility>

#include "pdegensol/errors.hpp"
#include "pdegensol/jet.hpp"
#include "pdegensol/numeric_config.hpp"

namespace pdegensol {

struct QuadratureResult {
  Jet value;
  double error = 0.0;  // sum of accepted panel estimates, worst component
  int panels = 0;
};

namespace gk15 {

// Kronrod abscissae on [0, 1] half-line (symmetric), Gauss points at odd positions.
inline constexpr std::array<double, 8> kNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

}  // namespace gk15

namespace detail {

struct Panel {
  Jet kronrod;
  Jet gauss;
  double err;
};

template <class F>
Panel gk15_panel(F& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  Jet fc = f(mid);
  Jet k = fc * gk15::kKronrodWeights[7];
  Jet g = fc * gk15::kGaussWeights[3];
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * gk15::kNodes[j];
    Jet f1 = f(mid - dx);
    Jet f2 = f(mid + dx);
    Jet sum = f1 + f2;
    k += sum * gk15::kKronrodWeights[j];
    if (j % 2 == 1) g += sum * gk15::kGaussWeights[j / 2];
  }
  k *= half;
  g *= half;
  double err = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) err = std::max(err, std::abs(k.coeff(i) - g.coeff(i)));
  return {k, g, err};
}

template <class F>
void adapt(F& f, double a, double b, const Panel& p, const Jet& scale, int depth, const NumericConfig& cfg,
           QuadratureResult& out) {
  bool ok = true;
  for (std::size_t i = 0; i < p.kronrod.size() && ok; ++i) {
    double tol = std::max(cfg.quad_abs_tol, cfg.quad_rel_tol * std::abs(scale.coeff(i)));
    ok = std::abs(p.kronrod.coeff(i) - p.gauss.coeff(i)) <= tol;
  }
  if (ok) {
    if (out.panels == 0) {
      out.value = p.kronrod;
    } else {
      out.value += p.kronrod;
    }
    out.error += p.err;
    ++out.panels;
    return;
  }
  if (depth >= cfg.quad_max_depth)
    throw QuadratureNonconvergence("adaptive quadrature reached maximum depth", a, b);
  const double m = 0.5 * (a + b);
  Panel left = gk15_panel(f, a, m);
  Panel right = gk15_panel(f, m, b);
  adapt(f, a, m, left, scale, depth + 1, cfg, out);
  adapt(f, m, b, right, scale, depth + 1, cfg, out);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod 7/15 quadrature of a jet-valued integrand over
/// [a, b]. All jet components share one subdivision, refined until every
/// panel's Kronrod-Gauss difference is within max(abs_tol, rel_tol*|total|)
/// componentwise.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, const NumericConfig& cfg) {
  QuadratureResult out;
  if (a == b) {
    out.value = f(a) * 0.0;
    out.panels = 1;
    return out;
  }
  detail::Panel whole = detail::gk15_panel(f, a, b);
  detail::adapt(f, a, b, whole, whole.kronrod, 0, cfg, out);
  return out;
}

}  // namespace pdegensol
