#include "lgm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "lgm/errors.hpp"
#include "lgm/special.hpp"

namespace lgm {

namespace {

constexpr double kModelMassFloor = 1e-12;

// Interpolated quantile of a sorted array (the common linear scheme).
double sorted_quantile(std::span<const double> sorted, double p) {
  const double h = p * (static_cast<double>(sorted.size()) - 1.0);
  const auto i = static_cast<std::size_t>(h);
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] + (h - static_cast<double>(i)) * (sorted[i + 1] - sorted[i]);
}

std::size_t freedman_diaconis_bins(std::span<const double> sorted) {
  const double n = static_cast<double>(sorted.size());
  const double iqr =
      sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
  const double range = sorted.back() - sorted.front();
  const double h = 2.0 * iqr / std::cbrt(n);
  std::size_t bins = 512;
  if (h > 0.0 && range / h < 512.0) {
    bins = static_cast<std::size_t>(std::ceil(range / h));
  }
  return std::clamp<std::size_t>(bins, 20, 512);
}

double loglik_sum(std::span<const double> y, const ScalarFn& log_pdf) {
  double sum = 0.0;
  for (double v : y) sum += log_pdf(v);
  return sum;
}

LrtResult lrt_impl(std::span<const double> y, const LgmParams& lgm,
                   const ScalarFn& null_log_pdf, std::string null_name,
                   std::optional<std::uint64_t> fit_hash) {
  if (y.empty()) throw EmptyInput("likelihood_ratio_test: empty sample array");
  if (fit_hash && *fit_hash != sample_hash(y)) {
    throw MismatchedData(
        "likelihood_ratio_test: parameters were fitted on different data");
  }
  const double ll_alt = lgm_log_likelihood(y, lgm);
  const double ll_null = loglik_sum(y, null_log_pdf);

  LrtResult res;
  res.t_stat = 2.0 * (ll_alt - ll_null);
  res.df = 3;
  res.p_value = chi_square_sf(std::max(res.t_stat, 0.0), res.df);
  res.null_model = std::move(null_name);
  res.alt_model = "lgm";
  return res;
}

}  // namespace

EmpiricalPdf empirical_pdf(std::span<const double> y, std::size_t bins) {
  if (y.size() < 10) throw TooFewSamples("empirical_pdf: need at least 10 samples");
  for (double v : y) {
    if (!std::isfinite(v)) {
      throw NonFiniteSample("empirical_pdf: NaN or infinite sample");
    }
  }
  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  const double hi = sorted.back();
  if (lo == hi) throw DegenerateInput("empirical_pdf: zero sample spread");

  const std::size_t b = bins == kAutoBins ? freedman_diaconis_bins(sorted) : bins;
  if (b < 1) throw InvalidParams("empirical_pdf: bin count must be >= 1");

  EmpiricalPdf out;
  out.edges.resize(b + 1);
  const double width = (hi - lo) / static_cast<double>(b);
  for (std::size_t i = 0; i <= b; ++i) {
    out.edges[i] = lo + width * static_cast<double>(i);
  }
  out.edges[b] = hi;
  for (std::size_t i = 0; i < b; ++i) {
    if (!(out.edges[i] < out.edges[i + 1])) {
      throw DegenerateInput("empirical_pdf: sample spread too small for bins");
    }
  }

  std::vector<std::size_t> counts(b, 0);
  for (double v : y) {
    auto idx = static_cast<std::size_t>((v - lo) / width);
    if (idx >= b) idx = b - 1;  // right edge inclusive in the last bin
    ++counts[idx];
  }
  out.mass.resize(b);
  const double inv_n = 1.0 / static_cast<double>(y.size());
  for (std::size_t i = 0; i < b; ++i) {
    out.mass[i] = static_cast<double>(counts[i]) * inv_n;
  }
  return out;
}

KldResult kld_empirical_vs_model(const EmpiricalPdf& hist,
                                 const ScalarFn& model_cdf,
                                 std::string model_name) {
  const std::size_t b = hist.bins();
  if (b == 0 || hist.edges.size() != b + 1) {
    throw InvalidParams("kld_empirical_vs_model: malformed histogram");
  }

  std::vector<double> q(b);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    q[i] = std::max(model_cdf(hist.edges[i + 1]) - model_cdf(hist.edges[i]), 0.0);
    total += q[i];
  }
  if (total > 0.0) {
    for (double& v : q) v /= total;
  }
  double refloor = 0.0;
  for (double& v : q) {
    if (v < kModelMassFloor) v = kModelMassFloor;
    refloor += v;
  }
  for (double& v : q) v /= refloor;

  KldResult res;
  res.model_name = std::move(model_name);
  for (std::size_t i = 0; i < b; ++i) {
    const double p = hist.mass[i];
    if (p > 0.0) {
      res.d_kl += p * std::log(p / q[i]);
      ++res.bins_used;
    }
  }
  return res;
}

GofResult goodness_of_fit(std::span<const double> y,
                          const ScalarFn& model_quantile) {
  if (y.size() < 30) throw TooFewSamples("goodness_of_fit: need at least 30 samples");

  GofResult res;
  res.empirical_q.assign(y.begin(), y.end());
  std::sort(res.empirical_q.begin(), res.empirical_q.end());
  if (res.empirical_q.front() == res.empirical_q.back()) {
    throw DegenerateInput("goodness_of_fit: zero sample spread");
  }

  const std::size_t n = y.size();
  res.model_q.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double prob =
        (static_cast<double>(k) + 0.5) / static_cast<double>(n);
    res.model_q[k] = model_quantile(prob);
  }

  const double mean =
      std::accumulate(res.empirical_q.begin(), res.empirical_q.end(), 0.0) /
      static_cast<double>(n);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = res.empirical_q[k] - res.model_q[k];
    const double t = res.empirical_q[k] - mean;
    ss_res += r * r;
    ss_tot += t * t;
  }
  res.r_squared = 1.0 - ss_res / ss_tot;

  // Fisher z interval on the implied correlation, mapped back to the R^2
  // scale. A lower bound that crosses zero collapses to zero.
  const double r = std::min(std::sqrt(std::max(res.r_squared, 0.0)), 1.0 - 1e-15);
  const double z = std::atanh(r);
  const double d = 1.959963984540054 / std::sqrt(static_cast<double>(n) - 3.0);
  const double lo = std::tanh(z - d);
  const double hi = std::tanh(z + d);
  res.ci_low = lo > 0.0 ? lo * lo : 0.0;
  // hi > r except when a perfect fit hits the atanh clip
  res.ci_high = std::max(hi * hi, res.r_squared);
  return res;
}

double chi_square_sf(double x, int df) {
  if (df < 1) throw InvalidParams("chi_square_sf: df must be >= 1");
  if (!(x >= 0.0)) throw InvalidParams("chi_square_sf: x must be >= 0");
  return regularized_gamma_q(0.5 * static_cast<double>(df), 0.5 * x);
}

std::uint64_t sample_hash(std::span<const double> y) {
  std::uint64_t h = 1469598103934665603ull;
  for (double v : y) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

LrtResult likelihood_ratio_test(std::span<const double> y, const LgmParams& lgm,
                                const LaplacianParams& null_params,
                                std::optional<std::uint64_t> fit_hash) {
  return lrt_impl(
      y, lgm, [&](double v) { return laplacian_log_pdf(v, null_params); },
      "laplacian", fit_hash);
}

LrtResult likelihood_ratio_test(std::span<const double> y, const LgmParams& lgm,
                                const GaussianParams& null_params,
                                std::optional<std::uint64_t> fit_hash) {
  return lrt_impl(
      y, lgm, [&](double v) { return gaussian_log_pdf(v, null_params); },
      "gaussian", fit_hash);
}

}  // namespace lgm
