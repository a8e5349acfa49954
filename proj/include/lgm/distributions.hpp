#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lgm {

/// Laplacian component: location mu1, scale sigma1 > 0.
struct LaplacianParams {
  double mu1 = 0.0;
  double sigma1 = 1.0;

  LaplacianParams() = default;
  LaplacianParams(double mu, double sigma);
};

/// Gaussian component: mean mu2, variance sigma2_sq > 0.
struct GaussianParams {
  double mu2 = 0.0;
  double sigma2_sq = 1.0;

  GaussianParams() = default;
  GaussianParams(double mu, double var);
};

/// Two-component mixture parameter set. lambda2 is stored alongside lambda1
/// for readability but is always derived as 1 - lambda1, so the weights sum
/// to one by construction.
struct LgmParams {
  double lambda1 = 0.5;
  double lambda2 = 0.5;
  LaplacianParams laplacian;
  GaussianParams gaussian;

  LgmParams() = default;
  LgmParams(double lam1, LaplacianParams lap, GaussianParams gauss);
};

// Densities. Parameters are validated at construction, so these are plain
// evaluations with no error paths.
double laplacian_pdf(double y, const LaplacianParams& p);
double gaussian_pdf(double y, const GaussianParams& p);
double lgm_pdf(double y, const LgmParams& p);

// Log densities. The mixture log density is a log-sum-exp over the weighted
// component log densities so it stays finite where the raw pdf underflows.
double laplacian_log_pdf(double y, const LaplacianParams& p);
double gaussian_log_pdf(double y, const GaussianParams& p);
double lgm_log_pdf(double y, const LgmParams& p);

/// Sum of lgm_log_pdf over all samples. Throws NonFiniteSample if any
/// sample is NaN or infinite, EmptyInput if y is empty.
double lgm_log_likelihood(std::span<const double> y, const LgmParams& p);

// CDFs: closed form for the Laplacian, erfc-based for the Gaussian.
double laplacian_cdf(double y, const LaplacianParams& p);
double gaussian_cdf(double y, const GaussianParams& p);
double lgm_cdf(double y, const LgmParams& p);

double laplacian_quantile(double prob, const LaplacianParams& p);
double gaussian_quantile(double prob, const GaussianParams& p);

/// Mixture quantile by bracketing bisection on lgm_cdf. The bracket starts
/// at the component quantiles and is doubled outward until it straddles
/// prob; bisection then runs until |cdf - prob| <= 1e-10. Throws
/// NoConvergence after 200 iterations (a parameter pathology).
double lgm_quantile(double prob, const LgmParams& p);

/// n i.i.d. draws from the mixture: with probability lambda1 an inverse-CDF
/// Laplacian draw, otherwise a Box-Muller Gaussian draw. The stream is a
/// pure function of the seed.
std::vector<double> sample_lgm(std::size_t n, const LgmParams& p,
                               std::uint64_t seed);

}  // namespace lgm
