#include "lgm/report.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include <json.hpp>

#include "lgm/errors.hpp"

namespace lgm {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// splitmix64; spreads the batch seed and trial key into per-trial seeds.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t string_hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t trial_seed(std::uint64_t base, const ManifestEntry& e) {
  const std::string key = e.subject + "\x1f" + e.activity + "\x1f" + e.trial;
  return mix64(base ^ string_hash(key));
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t hash_from_hex(const std::string& s) {
  return std::stoull(s, nullptr, 16);
}

GofSummary summarize(const GofResult& g) {
  return GofSummary{g.r_squared, g.ci_low, g.ci_high};
}

json kld_to_json(const KldResult& k) {
  return json{{"d_kl", k.d_kl}, {"bins_used", k.bins_used}};
}

json gof_to_json(const GofSummary& g) {
  return json{{"r_squared", g.r_squared},
              {"ci_low", g.ci_low},
              {"ci_high", g.ci_high}};
}

json lrt_to_json(const LrtResult& l) {
  return json{{"t_stat", l.t_stat},
              {"df", l.df},
              {"p_value", l.p_value},
              {"null_model", l.null_model},
              {"alt_model", l.alt_model}};
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
            c == '-' || c == '_')
               ? c
               : '_';
  }
  return out.empty() ? "_" : out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open for writing: " + path);
  out << text;
}

double metric_of(const EvalReport& r, const std::string& metric) {
  if (metric == "kld_lgm") return r.kld_lgm.d_kl;
  if (metric == "kld_laplacian") return r.kld_laplacian.d_kl;
  if (metric == "kld_gaussian") return r.kld_gaussian.d_kl;
  if (metric == "lambda1") return r.lgm.lambda1;
  throw InvalidParams("build_heatmap: unknown metric '" + metric + "'");
}

struct KldTriple {
  double lgm = 0.0, laplacian = 0.0, gaussian = 0.0;
  std::size_t trials = 0;
};

void write_average_table(const std::string& path,
                         const std::map<std::string, KldTriple>& rows,
                         const std::string& key_header) {
  std::string text = key_header + ",kld_lgm,kld_laplacian,kld_gaussian,trials\n";
  char buf[256];
  for (const auto& [label, acc] : rows) {
    const double n = static_cast<double>(acc.trials);
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%zu\n", label.c_str(),
                  acc.lgm / n, acc.laplacian / n, acc.gaussian / n, acc.trials);
    text += buf;
  }
  write_text_file(path, text);
}

}  // namespace

EvalReport evaluate_samples(std::span<const double> y,
                            const PipelineConfig& cfg, std::string subject,
                            std::string activity, std::string trial,
                            std::size_t channel) {
  const FitResult fit = fit_lgm(y, cfg.em, cfg.seed);

  EvalReport report;
  report.lgm = fit.params;
  report.em_iterations = fit.trace.iterations;
  report.em_converged = fit.trace.converged;

  report.laplacian = fit_laplacian(y);
  report.gaussian = fit_gaussian(y);

  report.subject = std::move(subject);
  report.activity = std::move(activity);
  report.trial = std::move(trial);
  report.channel = channel;
  report.n_samples = y.size();
  report.hash = sample_hash(y);

  const EmpiricalPdf hist = empirical_pdf(y, cfg.bins);
  const LgmParams lgm = report.lgm;
  const LaplacianParams lap = report.laplacian;
  const GaussianParams gauss = report.gaussian;

  report.kld_lgm = kld_empirical_vs_model(
      hist, [&](double v) { return lgm_cdf(v, lgm); }, "lgm");
  report.kld_laplacian = kld_empirical_vs_model(
      hist, [&](double v) { return laplacian_cdf(v, lap); }, "laplacian");
  report.kld_gaussian = kld_empirical_vs_model(
      hist, [&](double v) { return gaussian_cdf(v, gauss); }, "gaussian");

  report.gof_lgm = summarize(
      goodness_of_fit(y, [&](double p) { return lgm_quantile(p, lgm); }));
  report.gof_laplacian = summarize(
      goodness_of_fit(y, [&](double p) { return laplacian_quantile(p, lap); }));
  report.gof_gaussian = summarize(
      goodness_of_fit(y, [&](double p) { return gaussian_quantile(p, gauss); }));

  report.lrt_vs_laplacian =
      likelihood_ratio_test(y, lgm, lap, report.hash);
  report.lrt_vs_gaussian =
      likelihood_ratio_test(y, lgm, gauss, report.hash);
  return report;
}

EvalReport evaluate_with_params(std::span<const double> y,
                                const LgmParams& params,
                                const PipelineConfig& cfg, std::string subject,
                                std::string activity, std::string trial,
                                std::size_t channel) {
  EvalReport report;
  report.lgm = params;
  report.laplacian = fit_laplacian(y);
  report.gaussian = fit_gaussian(y);
  report.subject = std::move(subject);
  report.activity = std::move(activity);
  report.trial = std::move(trial);
  report.channel = channel;
  report.n_samples = y.size();
  report.hash = sample_hash(y);

  const EmpiricalPdf hist = empirical_pdf(y, cfg.bins);
  const LaplacianParams lap = report.laplacian;
  const GaussianParams gauss = report.gaussian;

  report.kld_lgm = kld_empirical_vs_model(
      hist, [&](double v) { return lgm_cdf(v, params); }, "lgm");
  report.kld_laplacian = kld_empirical_vs_model(
      hist, [&](double v) { return laplacian_cdf(v, lap); }, "laplacian");
  report.kld_gaussian = kld_empirical_vs_model(
      hist, [&](double v) { return gaussian_cdf(v, gauss); }, "gaussian");

  report.gof_lgm = summarize(
      goodness_of_fit(y, [&](double p) { return lgm_quantile(p, params); }));
  report.gof_laplacian = summarize(
      goodness_of_fit(y, [&](double p) { return laplacian_quantile(p, lap); }));
  report.gof_gaussian = summarize(
      goodness_of_fit(y, [&](double p) { return gaussian_quantile(p, gauss); }));

  report.lrt_vs_laplacian = likelihood_ratio_test(y, params, lap, report.hash);
  report.lrt_vs_gaussian = likelihood_ratio_test(y, params, gauss, report.hash);
  return report;
}

std::string report_to_json(const EvalReport& r) {
  json j;
  j["subject"] = r.subject;
  j["activity"] = r.activity;
  j["trial"] = r.trial;
  j["channel"] = r.channel;
  j["n_samples"] = r.n_samples;
  j["sample_hash"] = hash_hex(r.hash);
  j["lgm"] = {{"lambda1", r.lgm.lambda1},
              {"lambda2", r.lgm.lambda2},
              {"mu1", r.lgm.laplacian.mu1},
              {"sigma1", r.lgm.laplacian.sigma1},
              {"mu2", r.lgm.gaussian.mu2},
              {"sigma2_sq", r.lgm.gaussian.sigma2_sq}};
  j["laplacian"] = {{"mu1", r.laplacian.mu1}, {"sigma1", r.laplacian.sigma1}};
  j["gaussian"] = {{"mu2", r.gaussian.mu2}, {"sigma2_sq", r.gaussian.sigma2_sq}};
  j["kld"] = {{"lgm", kld_to_json(r.kld_lgm)},
              {"laplacian", kld_to_json(r.kld_laplacian)},
              {"gaussian", kld_to_json(r.kld_gaussian)}};
  j["gof"] = {{"lgm", gof_to_json(r.gof_lgm)},
              {"laplacian", gof_to_json(r.gof_laplacian)},
              {"gaussian", gof_to_json(r.gof_gaussian)}};
  j["lrt"] = {{"vs_laplacian", lrt_to_json(r.lrt_vs_laplacian)},
              {"vs_gaussian", lrt_to_json(r.lrt_vs_gaussian)}};
  j["em_iterations"] = r.em_iterations;
  j["em_converged"] = r.em_converged;
  return j.dump() + "\n";
}

EvalReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("report JSON: ") + e.what());
  }
  try {
    EvalReport r;
    r.subject = j.at("subject").get<std::string>();
    r.activity = j.at("activity").get<std::string>();
    r.trial = j.at("trial").get<std::string>();
    r.channel = j.at("channel").get<std::size_t>();
    r.n_samples = j.at("n_samples").get<std::size_t>();
    r.hash = hash_from_hex(j.at("sample_hash").get<std::string>());
    const json& m = j.at("lgm");
    r.lgm = LgmParams(
        m.at("lambda1").get<double>(),
        LaplacianParams(m.at("mu1").get<double>(), m.at("sigma1").get<double>()),
        GaussianParams(m.at("mu2").get<double>(), m.at("sigma2_sq").get<double>()));
    r.laplacian = LaplacianParams(j.at("laplacian").at("mu1").get<double>(),
                                  j.at("laplacian").at("sigma1").get<double>());
    r.gaussian = GaussianParams(j.at("gaussian").at("mu2").get<double>(),
                                j.at("gaussian").at("sigma2_sq").get<double>());
    auto kld_from = [](const json& k, const char* name) {
      KldResult res;
      res.d_kl = k.at("d_kl").get<double>();
      res.bins_used = k.at("bins_used").get<std::size_t>();
      res.model_name = name;
      return res;
    };
    r.kld_lgm = kld_from(j.at("kld").at("lgm"), "lgm");
    r.kld_laplacian = kld_from(j.at("kld").at("laplacian"), "laplacian");
    r.kld_gaussian = kld_from(j.at("kld").at("gaussian"), "gaussian");
    auto gof_from = [](const json& g) {
      return GofSummary{g.at("r_squared").get<double>(),
                        g.at("ci_low").get<double>(),
                        g.at("ci_high").get<double>()};
    };
    r.gof_lgm = gof_from(j.at("gof").at("lgm"));
    r.gof_laplacian = gof_from(j.at("gof").at("laplacian"));
    r.gof_gaussian = gof_from(j.at("gof").at("gaussian"));
    auto lrt_from = [](const json& l) {
      LrtResult res;
      res.t_stat = l.at("t_stat").get<double>();
      res.df = l.at("df").get<int>();
      res.p_value = l.at("p_value").get<double>();
      res.null_model = l.at("null_model").get<std::string>();
      res.alt_model = l.at("alt_model").get<std::string>();
      return res;
    };
    r.lrt_vs_laplacian = lrt_from(j.at("lrt").at("vs_laplacian"));
    r.lrt_vs_gaussian = lrt_from(j.at("lrt").at("vs_gaussian"));
    r.em_iterations = j.at("em_iterations").get<int>();
    r.em_converged = j.at("em_converged").get<bool>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("report JSON: ") + e.what());
  }
}

LgmParams params_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open params file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (j.contains("lgm")) j = j.at("lgm");
  try {
    return LgmParams(
        j.at("lambda1").get<double>(),
        LaplacianParams(j.at("mu1").get<double>(), j.at("sigma1").get<double>()),
        GaussianParams(j.at("mu2").get<double>(),
                       j.at("sigma2_sq").get<double>()));
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_curves_csv(const std::string& path, const EmpiricalPdf& hist,
                      const LgmParams& lgm, const LaplacianParams& lap,
                      const GaussianParams& gauss) {
  std::string text = "center,empirical,lgm,laplacian,gaussian\n";
  char buf[256];
  for (std::size_t b = 0; b < hist.bins(); ++b) {
    const double width = hist.edges[b + 1] - hist.edges[b];
    const double center = 0.5 * (hist.edges[b] + hist.edges[b + 1]);
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", center,
                  hist.mass[b] / width, lgm_pdf(center, lgm),
                  laplacian_pdf(center, lap), gaussian_pdf(center, gauss));
    text += buf;
  }
  write_text_file(path, text);
}

BatchResult run_batch(const SignalManifest& manifest, const PipelineConfig& cfg,
                      int jobs) {
  const std::size_t n = manifest.entries.size();
  std::vector<EvalReport> reports(n);
  std::vector<char> ok(n, 0);
  std::vector<std::string> errors(n);

  PipelineConfig trial_cfg = cfg;
  trial_cfg.em.parallel_restarts = false;  // the pool supplies the parallelism

  auto run_one = [&](std::size_t i) {
    const ManifestEntry& entry = manifest.entries[i];
    try {
      const TrialRecord rec = load_trial(entry, cfg.header);
      auto [channel, samples] = select_max_energy_channel(rec);
      PipelineConfig c = trial_cfg;
      c.seed = trial_seed(cfg.seed, entry);
      reports[i] = evaluate_samples(samples, c, entry.subject, entry.activity,
                                    entry.trial, channel);
      ok[i] = 1;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };

  int workers = jobs > 0 ? jobs
                         : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (static_cast<std::size_t>(workers) > n) workers = static_cast<int>(n);

  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          run_one(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  BatchResult result;
  for (std::size_t i = 0; i < n; ++i) {
    if (ok[i]) {
      result.reports.push_back(std::move(reports[i]));
    } else {
      result.failures.push_back({manifest.entries[i], errors[i]});
    }
  }
  result.heatmaps.push_back(build_heatmap(result.reports, "kld_lgm"));
  result.heatmaps.push_back(build_heatmap(result.reports, "kld_laplacian"));
  result.heatmaps.push_back(build_heatmap(result.reports, "kld_gaussian"));
  result.heatmaps.push_back(build_heatmap(result.reports, "lambda1"));
  return result;
}

HeatmapMatrix build_heatmap(const std::vector<EvalReport>& reports,
                            const std::string& metric_name) {
  std::set<std::string> subjects, activities;
  for (const EvalReport& r : reports) {
    subjects.insert(r.subject);
    activities.insert(r.activity);
  }

  HeatmapMatrix hm;
  hm.metric_name = metric_name;
  hm.row_labels.assign(subjects.begin(), subjects.end());
  hm.col_labels.assign(activities.begin(), activities.end());
  const std::size_t rows = hm.row_labels.size();
  const std::size_t cols = hm.col_labels.size();
  hm.values.assign(rows, std::vector<double>(cols, 0.0));
  hm.counts.assign(rows, std::vector<std::size_t>(cols, 0));

  std::map<std::string, std::size_t> row_of, col_of;
  for (std::size_t i = 0; i < rows; ++i) row_of[hm.row_labels[i]] = i;
  for (std::size_t j = 0; j < cols; ++j) col_of[hm.col_labels[j]] = j;

  for (const EvalReport& r : reports) {
    const std::size_t i = row_of[r.subject];
    const std::size_t j = col_of[r.activity];
    hm.values[i][j] += metric_of(r, metric_name);
    ++hm.counts[i][j];
  }
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      // cells with no trials stay empty (NaN); the mean uses only what is
      // present
      hm.values[i][j] = hm.counts[i][j] > 0
                            ? hm.values[i][j] / static_cast<double>(hm.counts[i][j])
                            : std::nan("");
    }
  }
  return hm;
}

void write_heatmap_csv(const std::string& path, const HeatmapMatrix& hm) {
  std::string text = "subject";
  for (const std::string& c : hm.col_labels) text += "," + c;
  text += "\n";
  char buf[64];
  for (std::size_t i = 0; i < hm.row_labels.size(); ++i) {
    text += hm.row_labels[i];
    for (std::size_t j = 0; j < hm.col_labels.size(); ++j) {
      std::snprintf(buf, sizeof(buf), ",%.17g", hm.values[i][j]);
      text += buf;
    }
    text += "\n";
  }
  write_text_file(path, text);
}

void write_heatmap_counts_csv(const std::string& path, const HeatmapMatrix& hm) {
  std::string text = "subject";
  for (const std::string& c : hm.col_labels) text += "," + c;
  text += "\n";
  for (std::size_t i = 0; i < hm.row_labels.size(); ++i) {
    text += hm.row_labels[i];
    for (std::size_t j = 0; j < hm.col_labels.size(); ++j) {
      text += "," + std::to_string(hm.counts[i][j]);
    }
    text += "\n";
  }
  write_text_file(path, text);
}

std::size_t write_batch_outputs(const BatchResult& batch,
                                const std::string& out_dir) {
  fs::create_directories(fs::path(out_dir) / "reports");

  std::set<std::string> used_names;
  for (const EvalReport& r : batch.reports) {
    std::string stem = sanitize(r.subject) + "__" + sanitize(r.activity) +
                       "__" + sanitize(r.trial);
    std::string name = stem;
    for (int k = 2; !used_names.insert(name).second; ++k) {
      name = stem + "_" + std::to_string(k);
    }
    write_text_file((fs::path(out_dir) / "reports" / (name + ".json")).string(),
                    report_to_json(r));
  }

  for (const HeatmapMatrix& hm : batch.heatmaps) {
    const std::string base = (fs::path(out_dir) / ("heatmap_" + hm.metric_name)).string();
    write_heatmap_csv(base + ".csv", hm);
    write_heatmap_counts_csv(base + "_counts.csv", hm);
  }

  // Marginal summaries: trial-averaged KLD per subject and per activity.
  std::map<std::string, KldTriple> by_subject, by_activity;
  for (const EvalReport& r : batch.reports) {
    for (auto* acc : {&by_subject[r.subject], &by_activity[r.activity]}) {
      acc->lgm += r.kld_lgm.d_kl;
      acc->laplacian += r.kld_laplacian.d_kl;
      acc->gaussian += r.kld_gaussian.d_kl;
      ++acc->trials;
    }
  }
  write_average_table((fs::path(out_dir) / "avg_kld_by_subject.csv").string(),
                      by_subject, "subject");
  write_average_table((fs::path(out_dir) / "avg_kld_by_activity.csv").string(),
                      by_activity, "activity");

  std::string failures_text;
  for (const BatchFailure& f : batch.failures) {
    failures_text += f.entry.subject + "\t" + f.entry.activity + "\t" +
                     f.entry.trial + "\t" + f.entry.path + "\t" + f.message +
                     "\n";
  }
  write_text_file((fs::path(out_dir) / "failures.txt").string(), failures_text);
  return batch.failures.size();
}

}  // namespace lgm
