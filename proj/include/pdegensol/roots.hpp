#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "pdegensol/errors.hpp"
#include "pdegensol/numeric_config.hpp"

namespace pdegensol {

struct RootResult {
  double root = 0.0;
  double residual = 0.0;  // |phi(root)|
  int evaluations = 0;
};

namespace detail {

template <class Phi>
std::optional<double> try_eval(Phi& phi, double z, int& evals) {
  ++evals;
  try {
    double v = phi(z);
    if (!std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const DomainError&) {
    return std::nullopt;
  } catch (const QuadratureNonconvergence&) {
    return std::nullopt;
  }
}

}  // namespace detail

namespace detail {

// One extra Newton step once the tolerance is met, kept only if it helps.
template <class Phi, class DPhi>
void polish(Phi& phi, DPhi& dphi, RootResult& res) {
  try {
    double slope = dphi(res.root);
    if (!std::isfinite(slope) || slope == 0.0) return;
    double z = res.root - phi(res.root) / slope;
    auto fz = try_eval(phi, z, res.evaluations);
    if (fz && std::abs(*fz) < res.residual) {
      res.root = z;
      res.residual = std::abs(*fz);
    }
  } catch (const NumericError&) {
  }
}

// Plain Newton iteration from a seed already close to the root (branch
// continuation). Succeeds only while |phi| decreases monotonically.
template <class Phi, class DPhi>
bool warm_newton(Phi& phi, DPhi& dphi, double seed, double f0, const NumericConfig& cfg, RootResult& res) {
  double z = seed, fz = f0;
  for (int it = 0; it < 8; ++it) {
    double slope = 0.0;
    try {
      slope = dphi(z);
    } catch (const NumericError&) {
      return false;
    }
    if (!std::isfinite(slope) || std::abs(slope) < kDegenerateSlope) return false;
    double next = z - fz / slope;
    auto fn = try_eval(phi, next, res.evaluations);
    if (!fn || !(std::abs(*fn) < std::abs(fz))) return false;
    z = next;
    fz = *fn;
    if (std::abs(fz) <= cfg.root_tol) {
      res.root = z;
      res.residual = std::abs(fz);
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// Real root of phi nearest the seed in the sense of bracket expansion:
/// probe outward from `seed` until a sign change is found, then refine by
/// Newton steps safeguarded with bisection. Points where phi is undefined
/// (DomainError) shrink the probe on that side instead of aborting. With
/// `warm` set the seed is a previous nearby root and plain Newton is tried
/// first.
template <class Phi, class DPhi>
RootResult find_root(Phi&& phi, DPhi&& dphi, double seed, const NumericConfig& cfg, bool warm = false) {
  RootResult res;
  int& evals = res.evaluations;
  const double tol = cfg.root_tol;

  auto f0 = detail::try_eval(phi, seed, evals);
  if (f0 && std::abs(*f0) <= tol) {
    res.root = seed;
    res.residual = std::abs(*f0);
    detail::polish(phi, dphi, res);
    return res;
  }
  if (warm && f0 && detail::warm_newton(phi, dphi, seed, *f0, cfg, res)) {
    detail::polish(phi, dphi, res);
    return res;
  }

  // Bracket search.
  double lo = 0, hi = 0, flo = 0, fhi = 0;
  bool bracketed = false;
  const double unit = std::max(1.0, std::abs(seed));
  double h0 = 1e-3 * unit;
  if (f0) {
    double slope = 0.0;
    try {
      slope = dphi(seed);
    } catch (const NumericError&) {
      slope = 0.0;
    }
    if (std::isfinite(slope) && slope != 0.0) {
      double step = -*f0 / slope;
      double probe = seed + 1.5 * step;
      if (auto fp = detail::try_eval(phi, probe, evals); fp && (*fp) * (*f0) <= 0) {
        lo = std::min(seed, probe);
        hi = std::max(seed, probe);
        flo = lo == seed ? *f0 : *fp;
        fhi = hi == seed ? *f0 : *fp;
        bracketed = true;
      }
      h0 = std::max(std::min(std::abs(step), unit), 1e-12 * unit);
    }
  }

  if (!bracketed) {
    // Walk outward on both sides; each side keeps its last valid probe.
    double last[2] = {seed, seed};
    std::optional<double> flast[2] = {f0, f0};
    double step[2] = {h0, h0};
    bool blocked[2] = {false, false};
    const double limit = 1e6 * unit;
    for (int iter = 0; iter < 200 && !bracketed && !(blocked[0] && blocked[1]); ++iter) {
      for (int side = 0; side < 2 && !bracketed; ++side) {
        if (blocked[side]) continue;
        double dir = side == 0 ? 1.0 : -1.0;
        double z = last[side] + dir * step[side];
        if (std::abs(z - seed) > limit) {
          blocked[side] = true;
          continue;
        }
        auto fz = detail::try_eval(phi, z, evals);
        if (!fz) {
          step[side] *= 0.5;
          if (step[side] < 1e-14 * unit) blocked[side] = true;
          continue;
        }
        if (flast[side] && (*fz) * (*flast[side]) <= 0) {
          lo = std::min(last[side], z);
          hi = std::max(last[side], z);
          flo = lo == z ? *fz : *flast[side];
          fhi = hi == z ? *fz : *flast[side];
          bracketed = true;
          break;
        }
        last[side] = z;
        flast[side] = fz;
        step[side] *= 2.0;
      }
    }
  }
  if (!bracketed) throw RootNotFound("no sign change found around seed " + std::to_string(seed));

  if (flo == 0.0 || fhi == 0.0) {
    res.root = flo == 0.0 ? lo : hi;
    return res;
  }

  // Safeguarded Newton inside [lo, hi].
  double z = std::abs(flo) < std::abs(fhi) ? lo : hi;
  double fz = std::abs(flo) < std::abs(fhi) ? flo : fhi;
  double best = z, fbest = fz;
  for (int it = 0; it < cfg.root_max_iter; ++it) {
    double slope = 0.0;
    try {
      slope = dphi(z);
    } catch (const NumericError&) {
      slope = 0.0;
    }
    double next = (std::isfinite(slope) && slope != 0.0) ? z - fz / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    auto fn = detail::try_eval(phi, next, evals);
    if (!fn) {
      next = 0.5 * (lo + hi);
      fn = detail::try_eval(phi, next, evals);
      if (!fn) throw RootNotFound("root function undefined inside bracket");
    }
    if ((*fn) * flo <= 0) {
      hi = next;
      fhi = *fn;
    } else {
      lo = next;
      flo = *fn;
    }
    z = next;
    fz = *fn;
    if (std::abs(fz) < std::abs(fbest)) {
      best = z;
      fbest = fz;
    }
    if (std::abs(fz) <= tol) break;
    if (hi - lo <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(z))) break;
  }
  res.root = best;
  res.residual = std::abs(fbest);
  if (res.residual <= tol) detail::polish(phi, dphi, res);
  return res;
}

}  // namespace pdegensol
