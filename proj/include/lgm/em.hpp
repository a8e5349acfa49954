#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lgm/distributions.hpp"

namespace lgm {

/// Posterior component-membership probabilities, one row per sample.
/// g1[n] + g2[n] = 1 up to rounding.
struct Responsibilities {
  std::vector<double> g1;  // Laplacian column
  std::vector<double> g2;  // Gaussian column
  std::size_t size() const { return g1.size(); }
};

struct EmConfig {
  double tol = 1e-10;  // threshold on the normalized squared parameter step
  int max_iter = 500;
  int n_restarts = 5;
  double sigma_floor = 0.0;  // minimum scale, signal units; 0 selects
                             // 1e-8 * sample standard deviation at fit time
  double lambda_floor = 1e-6;
  bool parallel_restarts = true;  // run restart chains on separate threads
};

struct EmTrace {
  std::vector<double> log_likelihoods;  // one entry per completed iteration
  int iterations = 0;
  bool converged = false;
};

struct FitResult {
  LgmParams params;
  EmTrace trace;
  double final_loglik = 0.0;
  double n1 = 0.0;  // effective Laplacian count, sum over g1
  double n2 = 0.0;
};

/// E-step: gamma_n1 = lam1 f1(y_n) / (lam1 f1(y_n) + lam2 f2(y_n)), computed
/// in log space. Throws DegenerateDensity if both component log densities
/// are -inf at some sample.
Responsibilities e_step(std::span<const double> y, const LgmParams& p);

/// Weighted median: after normalizing the weights, the smallest value whose
/// cumulative weight (in value-sorted order) reaches 0.5. This is the lower
/// endpoint of the minimizers of sum_n w_n |y_n - m|.
double weighted_median(std::span<const double> values,
                       std::span<const double> weights);

/// M-step closed-form updates. The weights are clamped to
/// [lambda_floor, 1 - lambda_floor] and the scales to sigma_floor; the scale
/// updates use the freshly updated locations. A component whose effective
/// count vanishes keeps its parameters from prev.
LgmParams m_step(std::span<const double> y, const Responsibilities& g,
                 const LgmParams& prev, double sigma_floor = 0.0,
                 double lambda_floor = 0.0);

/// Moment/median-based starting point: lambda1 = 0.5, Laplacian at the
/// sample median with MAD scale, Gaussian at the sample mean and variance.
LgmParams init_params(std::span<const double> y);

/// Full EM fit with seeded restarts; returns the chain with the highest
/// final log-likelihood (ties broken by lowest restart index).
FitResult fit_lgm(std::span<const double> y, const EmConfig& cfg,
                  std::uint64_t seed);

/// Standalone Laplacian MLE: median location (lower of the two central
/// order statistics for even N), mean absolute deviation scale.
LaplacianParams fit_laplacian(std::span<const double> y);

/// Standalone Gaussian MLE: mean and 1/N variance.
GaussianParams fit_gaussian(std::span<const double> y);

}  // namespace lgm
