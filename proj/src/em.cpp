#include "lgm/em.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <random>

#include "lgm/errors.hpp"

namespace lgm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double uniform_open01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

void require_finite(std::span<const double> y, const char* who) {
  for (double v : y) {
    if (!std::isfinite(v)) {
      throw NonFiniteSample(std::string(who) + ": NaN or infinite sample");
    }
  }
}

struct SampleStats {
  double median = 0.0;  // lower of the two central order statistics
  double mad = 0.0;     // mean absolute deviation about the median
  double mean = 0.0;
  double var = 0.0;  // 1/N variance
  double sd = 0.0;
};

double lower_median_sorted(std::span<const double> sorted) {
  const std::size_t n = sorted.size();
  return n % 2 == 1 ? sorted[n / 2] : sorted[n / 2 - 1];
}

SampleStats compute_stats(std::span<const double> sorted) {
  SampleStats st;
  const double n = static_cast<double>(sorted.size());
  st.median = lower_median_sorted(sorted);
  st.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  double abs_dev = 0.0, sq_dev = 0.0;
  for (double v : sorted) {
    abs_dev += std::fabs(v - st.median);
    const double d = v - st.mean;
    sq_dev += d * d;
  }
  st.mad = abs_dev / n;
  st.var = sq_dev / n;
  st.sd = std::sqrt(st.var);
  return st;
}

// E-step inner loop shared with fit_lgm: fills g and returns the data
// log-likelihood at p, which the normalization constants give for free.
double e_step_impl(std::span<const double> y, const LgmParams& p,
                   Responsibilities& g) {
  const std::size_t n = y.size();
  g.g1.resize(n);
  g.g2.resize(n);

  const double c1 = p.lambda1 > 0.0
                        ? std::log(p.lambda1) - std::log(2.0 * p.laplacian.sigma1)
                        : -kInf;
  const double c2 = p.lambda2 > 0.0
                        ? std::log(p.lambda2) -
                              0.5 * std::log(2.0 * M_PI * p.gaussian.sigma2_sq)
                        : -kInf;
  const double inv_s1 = 1.0 / p.laplacian.sigma1;
  const double inv_2v = 0.5 / p.gaussian.sigma2_sq;
  const double mu1 = p.laplacian.mu1;
  const double mu2 = p.gaussian.mu2;

  double loglik = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = y[i];
    const double l1 = c1 - std::fabs(v - mu1) * inv_s1;
    const double d2 = v - mu2;
    const double l2 = c2 - d2 * d2 * inv_2v;
    if (l1 == -kInf && l2 == -kInf) {
      throw DegenerateDensity(
          "e_step: both component densities underflow at a sample");
    }
    if (l2 >= l1) {
      const double t = std::exp(l1 - l2);
      const double denom = 1.0 + t;
      g.g1[i] = t / denom;
      g.g2[i] = 1.0 / denom;
      loglik += l2 + std::log1p(t);
    } else {
      const double t = std::exp(l2 - l1);
      const double denom = 1.0 + t;
      g.g1[i] = 1.0 / denom;
      g.g2[i] = t / denom;
      loglik += l1 + std::log1p(t);
    }
  }
  return loglik;
}

// Squared step between successive estimates over the scale-normalized
// parameter vector (lam1, mu1/s, sigma1/s, mu2/s, sigma2/s).
double param_step_sq(const LgmParams& a, const LgmParams& b, double s) {
  const double inv = 1.0 / s;
  const double d0 = b.lambda1 - a.lambda1;
  const double d1 = (b.laplacian.mu1 - a.laplacian.mu1) * inv;
  const double d2 = (b.laplacian.sigma1 - a.laplacian.sigma1) * inv;
  const double d3 = (b.gaussian.mu2 - a.gaussian.mu2) * inv;
  const double d4 =
      (std::sqrt(b.gaussian.sigma2_sq) - std::sqrt(a.gaussian.sigma2_sq)) * inv;
  return d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3 + d4 * d4;
}

LgmParams perturb_init(const LgmParams& base, double sd, std::mt19937_64& rng) {
  const double mu1 = base.laplacian.mu1 + 0.1 * sd * (2.0 * uniform_open01(rng) - 1.0);
  const double mu2 = base.gaussian.mu2 + 0.1 * sd * (2.0 * uniform_open01(rng) - 1.0);
  const double f1 = (rng() & 1u) ? 2.0 : 0.5;
  const double f2 = (rng() & 1u) ? 2.0 : 0.5;
  return LgmParams(0.5, LaplacianParams(mu1, base.laplacian.sigma1 * f1),
                   GaussianParams(mu2, base.gaussian.sigma2_sq * f2 * f2));
}

FitResult run_chain(std::span<const double> y, LgmParams params,
                    const EmConfig& cfg, double sigma_floor, double sd) {
  FitResult res;
  Responsibilities g;
  e_step_impl(y, params, g);

  for (int it = 0; it < cfg.max_iter; ++it) {
    const LgmParams next =
        m_step(y, g, params, sigma_floor, cfg.lambda_floor);
    const double ll = e_step_impl(y, next, g);
    res.trace.log_likelihoods.push_back(ll);
    const double step = param_step_sq(params, next, sd);
    params = next;
    res.final_loglik = ll;
    if (step < cfg.tol) {
      res.trace.converged = true;
      break;
    }
  }
  res.trace.iterations = static_cast<int>(res.trace.log_likelihoods.size());
  res.params = params;
  res.n1 = std::accumulate(g.g1.begin(), g.g1.end(), 0.0);
  res.n2 = std::accumulate(g.g2.begin(), g.g2.end(), 0.0);
  return res;
}

void validate_config(const EmConfig& cfg) {
  if (!(cfg.tol > 0.0) || cfg.max_iter < 1 || cfg.n_restarts < 1 ||
      !(cfg.sigma_floor >= 0.0) || !(cfg.lambda_floor >= 0.0) ||
      !(cfg.lambda_floor < 0.5)) {
    throw InvalidParams("EmConfig: tol > 0, max_iter >= 1, n_restarts >= 1, "
                        "sigma_floor >= 0, 0 <= lambda_floor < 0.5 required");
  }
}

}  // namespace

Responsibilities e_step(std::span<const double> y, const LgmParams& p) {
  if (y.empty()) throw EmptyInput("e_step: empty sample array");
  require_finite(y, "e_step");
  Responsibilities g;
  e_step_impl(y, p, g);
  return g;
}

double weighted_median(std::span<const double> values,
                       std::span<const double> weights) {
  if (values.empty()) throw EmptyInput("weighted_median: empty input");
  if (values.size() != weights.size()) {
    throw InvalidParams("weighted_median: length mismatch");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidParams("weighted_median: weights must be finite and >= 0");
    }
    total += w;
  }
  if (!(total > 0.0)) throw EmptyInput("weighted_median: weights sum to zero");

  const double half = 0.5 * total;
  // EM calls this with value-sorted data every iteration; skip the argsort
  // when the caller already sorted.
  if (std::is_sorted(values.begin(), values.end())) {
    double cum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      cum += weights[i];
      if (cum >= half) return values[i];
    }
    return values.back();
  }

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  double cum = 0.0;
  for (std::size_t i : order) {
    cum += weights[i];
    if (cum >= half) return values[i];
  }
  return values[order.back()];
}

LgmParams m_step(std::span<const double> y, const Responsibilities& g,
                 const LgmParams& prev, double sigma_floor,
                 double lambda_floor) {
  const std::size_t n = y.size();
  if (n == 0) throw EmptyInput("m_step: empty sample array");
  if (g.g1.size() != n || g.g2.size() != n) {
    throw InvalidParams("m_step: responsibility dimensions disagree with data");
  }

  const double n1 = std::accumulate(g.g1.begin(), g.g1.end(), 0.0);
  const double n2 = std::accumulate(g.g2.begin(), g.g2.end(), 0.0);

  const double lam1 = std::clamp(n1 / static_cast<double>(n), lambda_floor,
                                 1.0 - lambda_floor);

  LaplacianParams lap = prev.laplacian;
  if (n1 > 0.0) {
    const double mu1 = weighted_median(y, g.g1);
    double s1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) s1 += g.g1[i] * std::fabs(y[i] - mu1);
    s1 = std::max(s1 / n1, sigma_floor);
    if (s1 > 0.0) lap = LaplacianParams(mu1, s1);
  }

  GaussianParams gauss = prev.gaussian;
  if (n2 > 0.0) {
    double mu2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu2 += g.g2[i] * y[i];
    mu2 /= n2;
    double v2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = y[i] - mu2;
      v2 += g.g2[i] * d * d;
    }
    v2 = std::max(v2 / n2, sigma_floor * sigma_floor);
    if (v2 > 0.0) gauss = GaussianParams(mu2, v2);
  }

  return LgmParams(lam1, lap, gauss);
}

LgmParams init_params(std::span<const double> y) {
  if (y.size() < 10) throw TooFewSamples("init_params: need at least 10 samples");
  require_finite(y, "init_params");
  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) {
    throw DegenerateInput("init_params: zero sample spread");
  }
  const SampleStats st = compute_stats(sorted);
  return LgmParams(0.5, LaplacianParams(st.median, st.mad),
                   GaussianParams(st.mean, st.var));
}

FitResult fit_lgm(std::span<const double> y, const EmConfig& cfg,
                  std::uint64_t seed) {
  validate_config(cfg);
  if (y.size() < 10) throw TooFewSamples("fit_lgm: need at least 10 samples");
  require_finite(y, "fit_lgm");

  // EM is permutation-invariant, so work on a sorted copy; the weighted
  // median then costs one pass per iteration instead of a sort.
  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) {
    throw DegenerateInput("fit_lgm: zero sample spread");
  }

  const SampleStats st = compute_stats(sorted);
  const double sigma_floor =
      cfg.sigma_floor > 0.0 ? cfg.sigma_floor : 1e-8 * st.sd;
  const LgmParams base = init_params(sorted);

  // Restart starting points are drawn up front so the chain results do not
  // depend on scheduling.
  std::vector<LgmParams> inits{base};
  std::mt19937_64 rng(seed);
  for (int r = 1; r < cfg.n_restarts; ++r) {
    inits.push_back(perturb_init(base, st.sd, rng));
  }

  std::vector<FitResult> chains(inits.size());
  if (cfg.parallel_restarts && inits.size() > 1) {
    std::vector<std::future<FitResult>> futures;
    futures.reserve(inits.size());
    for (const LgmParams& init : inits) {
      futures.push_back(std::async(std::launch::async, [&, init] {
        return run_chain(sorted, init, cfg, sigma_floor, st.sd);
      }));
    }
    for (std::size_t i = 0; i < futures.size(); ++i) chains[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < inits.size(); ++i) {
      chains[i] = run_chain(sorted, inits[i], cfg, sigma_floor, st.sd);
    }
  }

  // Highest final log-likelihood wins; ties go to the lowest restart index.
  std::size_t best = 0;
  for (std::size_t i = 1; i < chains.size(); ++i) {
    if (chains[i].final_loglik > chains[best].final_loglik) best = i;
  }
  return chains[best];
}

LaplacianParams fit_laplacian(std::span<const double> y) {
  if (y.size() < 2) throw TooFewSamples("fit_laplacian: need at least 2 samples");
  require_finite(y, "fit_laplacian");
  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) {
    throw DegenerateInput("fit_laplacian: zero sample spread");
  }
  const double mu = lower_median_sorted(sorted);
  double s = 0.0;
  for (double v : sorted) s += std::fabs(v - mu);
  return LaplacianParams(mu, s / static_cast<double>(sorted.size()));
}

GaussianParams fit_gaussian(std::span<const double> y) {
  if (y.size() < 2) throw TooFewSamples("fit_gaussian: need at least 2 samples");
  require_finite(y, "fit_gaussian");
  const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
  if (*mn == *mx) throw DegenerateInput("fit_gaussian: zero sample spread");
  const double n = static_cast<double>(y.size());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sq = 0.0;
  for (double v : y) {
    const double d = v - mean;
    sq += d * d;
  }
  return GaussianParams(mean, sq / n);
}

}  // namespace lgm
