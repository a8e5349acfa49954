#include "lgm/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "lgm/errors.hpp"
#include "lgm/special.hpp"

namespace lgm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Uniform in the open interval (0, 1), 53-bit resolution. Hand-rolled so the
// stream is identical on every platform (std::uniform_real_distribution is
// implementation-defined).
double uniform_open01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double laplace_inverse_cdf(double u, const LaplacianParams& p) {
  // u in (0, 1); branch on the median.
  if (u < 0.5) return p.mu1 + p.sigma1 * std::log(2.0 * u);
  return p.mu1 - p.sigma1 * std::log(2.0 * (1.0 - u));
}

}  // namespace

LaplacianParams::LaplacianParams(double mu, double sigma)
    : mu1(mu), sigma1(sigma) {
  if (!std::isfinite(mu) || !std::isfinite(sigma) || !(sigma > 0.0)) {
    throw InvalidParams("LaplacianParams: require finite mu1 and sigma1 > 0");
  }
}

GaussianParams::GaussianParams(double mu, double var) : mu2(mu), sigma2_sq(var) {
  if (!std::isfinite(mu) || !std::isfinite(var) || !(var > 0.0)) {
    throw InvalidParams("GaussianParams: require finite mu2 and sigma2_sq > 0");
  }
}

LgmParams::LgmParams(double lam1, LaplacianParams lap, GaussianParams gauss)
    : lambda1(lam1), lambda2(1.0 - lam1), laplacian(lap), gaussian(gauss) {
  if (!(lam1 >= 0.0) || !(lam1 <= 1.0)) {
    throw InvalidParams("LgmParams: lambda1 must lie in [0, 1]");
  }
}

double laplacian_pdf(double y, const LaplacianParams& p) {
  return std::exp(-std::fabs(y - p.mu1) / p.sigma1) / (2.0 * p.sigma1);
}

double gaussian_pdf(double y, const GaussianParams& p) {
  const double d = y - p.mu2;
  return std::exp(-d * d / (2.0 * p.sigma2_sq)) /
         std::sqrt(2.0 * M_PI * p.sigma2_sq);
}

double lgm_pdf(double y, const LgmParams& p) {
  return p.lambda1 * laplacian_pdf(y, p.laplacian) +
         p.lambda2 * gaussian_pdf(y, p.gaussian);
}

double laplacian_log_pdf(double y, const LaplacianParams& p) {
  return -std::log(2.0 * p.sigma1) - std::fabs(y - p.mu1) / p.sigma1;
}

double gaussian_log_pdf(double y, const GaussianParams& p) {
  const double d = y - p.mu2;
  return -0.5 * std::log(2.0 * M_PI * p.sigma2_sq) -
         d * d / (2.0 * p.sigma2_sq);
}

double lgm_log_pdf(double y, const LgmParams& p) {
  // log(lam1 f1 + lam2 f2) as a log-sum-exp; a zero weight drops its
  // component so that 0 * underflow cannot poison the result.
  const double l1 = p.lambda1 > 0.0
                        ? std::log(p.lambda1) + laplacian_log_pdf(y, p.laplacian)
                        : -kInf;
  const double l2 = p.lambda2 > 0.0
                        ? std::log(p.lambda2) + gaussian_log_pdf(y, p.gaussian)
                        : -kInf;
  const double m = std::max(l1, l2);
  if (m == -kInf) return -kInf;
  return m + std::log1p(std::exp(std::min(l1, l2) - m));
}

double lgm_log_likelihood(std::span<const double> y, const LgmParams& p) {
  if (y.empty()) throw EmptyInput("lgm_log_likelihood: empty sample array");
  double sum = 0.0;
  for (double v : y) {
    if (!std::isfinite(v)) {
      throw NonFiniteSample("lgm_log_likelihood: NaN or infinite sample");
    }
    sum += lgm_log_pdf(v, p);
  }
  return sum;
}

double laplacian_cdf(double y, const LaplacianParams& p) {
  const double z = (y - p.mu1) / p.sigma1;
  if (z < 0.0) return 0.5 * std::exp(z);
  return 1.0 - 0.5 * std::exp(-z);
}

double gaussian_cdf(double y, const GaussianParams& p) {
  return standard_normal_cdf((y - p.mu2) / std::sqrt(p.sigma2_sq));
}

double lgm_cdf(double y, const LgmParams& p) {
  return p.lambda1 * laplacian_cdf(y, p.laplacian) +
         p.lambda2 * gaussian_cdf(y, p.gaussian);
}

double laplacian_quantile(double prob, const LaplacianParams& p) {
  if (!(prob > 0.0) || !(prob < 1.0)) {
    throw InvalidParams("laplacian_quantile: prob must lie in (0, 1)");
  }
  return laplace_inverse_cdf(prob, p);
}

double gaussian_quantile(double prob, const GaussianParams& p) {
  if (!(prob > 0.0) || !(prob < 1.0)) {
    throw InvalidParams("gaussian_quantile: prob must lie in (0, 1)");
  }
  return p.mu2 + std::sqrt(p.sigma2_sq) * inverse_normal_cdf(prob);
}

double lgm_quantile(double prob, const LgmParams& p) {
  if (!(prob > 0.0) || !(prob < 1.0)) {
    throw InvalidParams("lgm_quantile: prob must lie in (0, 1)");
  }
  constexpr double kCdfTol = 1e-10;
  constexpr int kMaxIter = 200;

  // The mixture CDF at each component quantile brackets prob from both
  // sides, so [lo, hi] below already straddles; the doubling loop only has
  // to mop up float-rounding edge cases.
  double lo, hi;
  if (p.lambda1 <= 0.0) {
    lo = hi = gaussian_quantile(prob, p.gaussian);
  } else if (p.lambda2 <= 0.0) {
    lo = hi = laplacian_quantile(prob, p.laplacian);
  } else {
    const double q1 = laplacian_quantile(prob, p.laplacian);
    const double q2 = gaussian_quantile(prob, p.gaussian);
    lo = std::min(q1, q2);
    hi = std::max(q1, q2);
  }

  double step = std::max(hi - lo, 1.0);
  for (int i = 0; lgm_cdf(lo, p) > prob && i < kMaxIter; ++i) {
    lo -= step;
    step *= 2.0;
  }
  step = std::max(hi - lo, 1.0);
  for (int i = 0; lgm_cdf(hi, p) < prob && i < kMaxIter; ++i) {
    hi += step;
    step *= 2.0;
  }

  for (int i = 0; i < kMaxIter; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double c = lgm_cdf(mid, p);
    if (std::fabs(c - prob) <= kCdfTol) return mid;
    if (mid == lo || mid == hi) break;  // interval exhausted
    if (c < prob) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw NoConvergence("lgm_quantile: bisection failed to reach 1e-10");
}

std::vector<double> sample_lgm(std::size_t n, const LgmParams& p,
                               std::uint64_t seed) {
  if (n < 1) throw InvalidParams("sample_lgm: n must be >= 1");
  std::mt19937_64 rng(seed);
  const double sigma2 = std::sqrt(p.gaussian.sigma2_sq);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = uniform_open01(rng);
    if (pick < p.lambda1) {
      out.push_back(laplace_inverse_cdf(uniform_open01(rng), p.laplacian));
    } else {
      const double u1 = uniform_open01(rng);
      const double u2 = uniform_open01(rng);
      const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
      out.push_back(p.gaussian.mu2 + sigma2 * z);
    }
  }
  return out;
}

}  // namespace lgm
