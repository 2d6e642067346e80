#pragma once

#include <stdexcept>

namespace pdegensol {

struct NumericConfig {
  double quad_rel_tol = 1e-10;
  double quad_abs_tol = 1e-12;
  int quad_max_depth = 30;
  // Deepest Integral nesting in the built-in catalog is five: an x-integral
  // of a factor whose exponent nests four more integrals.
  int nest_limit = 5;
  double root_tol = 1e-12;
  int root_max_iter = 100;

  void validate() const {
    if (!(quad_rel_tol > 0) || !(quad_abs_tol > 0) || quad_max_depth <= 0 || nest_limit <= 0 ||
        !(root_tol > 0) || root_max_iter <= 0)
      throw std::invalid_argument("numeric configuration values must be positive");
  }
};

// Singularity guards shared by the evaluator and the root finder.
inline constexpr double kTinyDenominator = 1e-14;
inline constexpr double kTanPoleMargin = 1e-3;
inline constexpr double kDegenerateSlope = 1e-10;

}  // namespace pdegensol
