#pragma once

#include <cmath>
#include <numbers>

#include "gsm/errors.hpp"

namespace gsm {

/// Chi-square CDF for 2 or 3 degrees of freedom (closed forms).
inline double chi_square_cdf(int dof, double x) {
  if (x <= 0.0) return 0.0;
  if (dof == 2) return 1.0 - std::exp(-0.5 * x);
  if (dof == 3) {
    return std::erf(std::sqrt(0.5 * x)) -
           std::sqrt(2.0 * x / std::numbers::pi) * std::exp(-0.5 * x);
  }
  throw DimensionMismatch("chi_square_cdf supports 2 or 3 degrees of freedom");
}

}  // namespace gsm
