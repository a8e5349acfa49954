// Independent reference implementations used to freeze expected values.
// Everything here is deliberately naive and kept apart from the library
// code paths it checks.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace oracles {

inline double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f,
                                   double a, double b, double fa, double fm,
                                   double fb, double whole, double tol,
                                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

// Adaptive Simpson quadrature of f over [a, b].
inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-11, int depth = 60) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = simpson(a, b, fa, fm, fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth);
}

// Integrates f over [a, b] splitting at interior kinks (e.g. the Laplacian
// peak) so Simpson's rule keeps its accuracy.
inline double integrate_split(const std::function<double(double)>& f, double a,
                              double b, std::vector<double> kinks,
                              double tol = 1e-11) {
  kinks.push_back(a);
  kinks.push_back(b);
  std::sort(kinks.begin(), kinks.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < kinks.size(); ++i) {
    const double lo = std::max(kinks[i], a);
    const double hi = std::min(kinks[i + 1], b);
    if (hi > lo) total += integrate(f, lo, hi, tol);
  }
  return total;
}

// Lower endpoint of argmin_m sum_n w_n |y_n - m| over the sample values.
inline double brute_force_weighted_median(std::span<const double> values,
                                          std::span<const double> weights) {
  if (values.empty()) throw std::invalid_argument("empty");
  std::vector<double> candidates(values.begin(), values.end());
  std::sort(candidates.begin(), candidates.end());
  double best_m = candidates.front();
  double best_obj = std::numeric_limits<double>::infinity();
  for (double m : candidates) {
    double obj = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      obj += weights[i] * std::fabs(values[i] - m);
    }
    if (obj < best_obj) {  // ties keep the earlier (lower) candidate
      best_obj = obj;
      best_m = m;
    }
  }
  return best_m;
}

// Standard normal quantile by plain bisection on the erfc-based CDF.
inline double normal_quantile_bisect(double p) {
  auto cdf = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  double lo = -50.0, hi = 50.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Chi-square survival by quadrature of the density over [x, far tail].
inline double chi_square_sf_quadrature(double x, int df) {
  const double a = 0.5 * df;
  const double norm = std::pow(2.0, a) * std::tgamma(a);
  auto pdf = [&](double t) {
    return std::pow(t, a - 1.0) * std::exp(-0.5 * t) / norm;
  };
  const double upper = std::max(x + 400.0, 4.0 * x + 400.0);
  return integrate(pdf, x, upper, 1e-12);
}

}  // namespace oracles
