#pragma once

#include <functional>
#include <vector>

#include "seu/matrix.hpp"

namespace seu {

/// Several matrix-valued integrals of the same scalar variable, evaluated
/// together so they share integrand work.
using MatStack = std::vector<Mat>;

struct QuadratureResult {
  MatStack value;
  double error_estimate = 0.0;
  int segments = 0;
};

/// Globally adaptive 15-point Gauss-Kronrod integration of a stack of
/// matrix integrands over [a, b]. The segment error is the max over stack
/// components of the max-abs Kronrod/Gauss difference; the worst segment
/// is bisected until the summed error drops below abs_tol. Throws
/// NumericalFailure with diagnostics when the segment budget runs out.
QuadratureResult adaptive_gauss_kronrod(const std::function<MatStack(double)>& f, double a,
                                        double b, double abs_tol, int max_segments = 4000);

}  // namespace seu
