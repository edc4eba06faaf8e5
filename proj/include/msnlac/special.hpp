#pragma once

namespace msnlac::special {

// Lanczos approximation (g = 7, 9 coefficients) with reflection for x < 1/2.
// Relative error is below 1e-13 over the arguments the estimators use.
double lgamma(double x);
double tgamma(double x);

} // namespace msnlac::special
