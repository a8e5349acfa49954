#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lgm/distributions.hpp"

namespace lgm {

/// Normalized histogram: B+1 strictly increasing edges, B per-bin
/// probability masses summing to one.
struct EmpiricalPdf {
  std::vector<double> edges;
  std::vector<double> mass;
  std::size_t bins() const { return mass.size(); }
};

struct KldResult {
  double d_kl = 0.0;  // nats
  std::size_t bins_used = 0;
  std::string model_name;
};

struct GofResult {
  std::vector<double> empirical_q;  // sorted sample values
  std::vector<double> model_q;      // model quantiles at (k+0.5)/N
  double r_squared = 0.0;
  double ci_low = 0.0;  // 95% bounds via Fisher z on sqrt(max(r_squared, 0))
  double ci_high = 0.0;
};

struct LrtResult {
  double t_stat = 0.0;
  int df = 0;
  double p_value = 1.0;
  std::string null_model;
  std::string alt_model;
};

/// bins = kAutoBins selects the Freedman-Diaconis count clamped to [20, 512].
inline constexpr std::size_t kAutoBins = 0;

/// Equal-width histogram over [min(y), max(y)], right edge inclusive in the
/// last bin.
EmpiricalPdf empirical_pdf(std::span<const double> y,
                           std::size_t bins = kAutoBins);

using ScalarFn = std::function<double(double)>;

/// D_KL(hist || model) in nats. Model mass per bin comes from CDF
/// differences across the bin edges, renormalized over the histogram
/// support; bins where it underflows are floored at 1e-12 and the vector is
/// renormalized again. Terms with zero empirical mass contribute nothing.
KldResult kld_empirical_vs_model(const EmpiricalPdf& hist,
                                 const ScalarFn& model_cdf,
                                 std::string model_name);

/// Q-Q comparison of sorted samples against model quantiles at plotting
/// positions (k+0.5)/N, with R-squared measured against the line of
/// equality and a 95% Fisher-z confidence interval.
GofResult goodness_of_fit(std::span<const double> y,
                          const ScalarFn& model_quantile);

/// Chi-square survival function Q(df/2, x/2), absolute error <= 1e-10.
double chi_square_sf(double x, int df);

/// FNV-1a over the raw sample bytes; used to tie fits and evaluations to
/// the exact array they ran on.
std::uint64_t sample_hash(std::span<const double> y);

/// T = 2(loglik_LGM - loglik_null) with df = 3 (5 free mixture parameters
/// against 2); p-value from chi_square_sf(max(T, 0), 3). When fit_hash is
/// given it must equal sample_hash(y), otherwise MismatchedData is thrown.
LrtResult likelihood_ratio_test(std::span<const double> y, const LgmParams& lgm,
                                const LaplacianParams& null_params,
                                std::optional<std::uint64_t> fit_hash = {});
LrtResult likelihood_ratio_test(std::span<const double> y, const LgmParams& lgm,
                                const GaussianParams& null_params,
                                std::optional<std::uint64_t> fit_hash = {});

}  // namespace lgm
