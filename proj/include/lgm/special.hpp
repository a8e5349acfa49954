#pragma once

namespace lgm {

// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
// Series expansion for x < a + 1, Lentz continued fraction otherwise.
double regularized_gamma_p(double a, double x);

// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double regularized_gamma_q(double a, double x);

// Standard normal CDF, computed through erfc so the tails keep full
// relative precision.
double standard_normal_cdf(double z);

// Standard normal quantile. Rational initial guess refined by one Halley
// step against standard_normal_cdf; absolute error well below 1e-13 over
// (0, 1).
double inverse_normal_cdf(double p);

}  // namespace lgm
