// lgmfit: fits Laplacian, Gaussian, and Laplacian-Gaussian mixture models
// to signal-amplitude samples and emits the evaluation battery (KLD,
// Q-Q goodness of fit, likelihood-ratio tests) as machine-readable files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lgm/distributions.hpp"
#include "lgm/errors.hpp"
#include "lgm/ingestion.hpp"
#include "lgm/report.hpp"

namespace {

namespace fs = std::filesystem;

struct CommonFlags {
  std::size_t bins = lgm::kAutoBins;
  int restarts = 5;
  double tol = 1e-10;
  int max_iter = 500;
  std::uint64_t seed = 0;
  bool header = false;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_header = true) {
  cmd->add_option("--bins", f.bins, "Histogram bin count (0 = auto)");
  cmd->add_option("--restarts", f.restarts, "EM restarts")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", f.tol, "EM convergence threshold");
  cmd->add_option("--max-iter", f.max_iter, "EM iteration cap")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "Random seed");
  cmd->add_option("--out-dir", f.out_dir, "Output directory");
  if (with_header) cmd->add_flag("--header", f.header, "Skip one header line in data files");
}

lgm::PipelineConfig to_pipeline(const CommonFlags& f) {
  lgm::PipelineConfig cfg;
  cfg.em.tol = f.tol;
  cfg.em.max_iter = f.max_iter;
  cfg.em.n_restarts = f.restarts;
  cfg.bins = f.bins;
  cfg.seed = f.seed;
  cfg.header = f.header;
  return cfg;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw lgm::ParseError("cannot open for writing: " + path);
  out << text;
}

std::string stem_of(const std::string& path) {
  return fs::path(path).stem().string();
}

int run_fit(const std::string& input, const CommonFlags& flags, bool curves) {
  const lgm::TrialRecord rec = lgm::load_trial_file(input, flags.header);
  auto [channel, samples] = lgm::select_max_energy_channel(rec);

  const lgm::PipelineConfig cfg = to_pipeline(flags);
  const lgm::EvalReport report =
      lgm::evaluate_samples(samples, cfg, "-", "-", stem_of(input), channel);

  fs::create_directories(flags.out_dir);
  const std::string base = (fs::path(flags.out_dir) / stem_of(input)).string();
  write_file(base + ".report.json", lgm::report_to_json(report));
  if (curves) {
    const lgm::EmpiricalPdf hist = lgm::empirical_pdf(samples, cfg.bins);
    lgm::write_curves_csv(base + ".curves.csv", hist, report.lgm,
                          report.laplacian, report.gaussian);
  }
  std::cout << "wrote " << base << ".report.json (channel " << channel << ", "
            << samples.size() << " samples)\n";
  return 0;
}

int run_batch(const std::string& manifest_path, const CommonFlags& flags,
              int jobs) {
  lgm::SignalManifest manifest;
  try {
    manifest = lgm::load_manifest(manifest_path);
  } catch (const lgm::DuplicateKey&) {
    throw;
  } catch (const lgm::Error& e) {
    // any manifest-phase problem is fatal with the manifest exit code
    throw lgm::ManifestError(e.what());
  }
  const lgm::BatchResult batch =
      lgm::run_batch(manifest, to_pipeline(flags), jobs);
  fs::create_directories(flags.out_dir);
  const std::size_t failed = lgm::write_batch_outputs(batch, flags.out_dir);
  std::cout << "batch: " << batch.reports.size() << " trials done, " << failed
            << " failed; outputs in " << flags.out_dir << "\n";
  return 0;
}

int run_synth(double lambda1, double mu1, double sigma1, double mu2,
              double sigma2_sq, std::size_t n, std::uint64_t seed,
              const std::string& out) {
  if (n < 1) throw lgm::InvalidParams("synth: n must be >= 1");
  const lgm::LgmParams params(lambda1, lgm::LaplacianParams(mu1, sigma1),
                              lgm::GaussianParams(mu2, sigma2_sq));
  const std::vector<double> y = lgm::sample_lgm(n, params, seed);
  lgm::write_samples(out, y);
  std::printf(
      "synth: n=%zu seed=%llu lambda1=%.17g mu1=%.17g sigma1=%.17g "
      "mu2=%.17g sigma2_sq=%.17g -> %s\n",
      n, static_cast<unsigned long long>(seed), lambda1, mu1, sigma1, mu2,
      sigma2_sq, out.c_str());
  return 0;
}

int run_eval(const std::string& input, const std::string& params_path,
             const CommonFlags& flags) {
  const lgm::LgmParams params = lgm::params_from_json_file(params_path);
  const lgm::TrialRecord rec = lgm::load_trial_file(input, flags.header);
  auto [channel, samples] = lgm::select_max_energy_channel(rec);

  const lgm::EvalReport report = lgm::evaluate_with_params(
      samples, params, to_pipeline(flags), "-", "-", stem_of(input), channel);

  fs::create_directories(flags.out_dir);
  const std::string base = (fs::path(flags.out_dir) / stem_of(input)).string();
  write_file(base + ".eval.json", lgm::report_to_json(report));
  std::cout << "wrote " << base << ".eval.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Laplacian-Gaussian mixture fitting and evaluation for "
               "signal-amplitude samples"};
  app.require_subcommand(1);

  // fit
  auto* fit = app.add_subcommand("fit", "Fit all three models to one trial file");
  std::string fit_input;
  CommonFlags fit_flags;
  bool fit_curves = false;
  fit->add_option("input", fit_input, "Delimited trial file")->required();
  add_common(fit, fit_flags);
  fit->add_flag("--curves", fit_curves, "Also write plot-ready density curves");

  // batch
  auto* batch = app.add_subcommand("batch", "Run a manifest of trials");
  std::string batch_manifest;
  CommonFlags batch_flags;
  int batch_jobs = 0;
  batch->add_option("manifest", batch_manifest, "Manifest file")->required();
  add_common(batch, batch_flags);
  batch->add_option("--jobs", batch_jobs, "Worker threads (0 = hardware)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate mixture samples");
  double s_lambda1 = 0.5, s_mu1 = 0.0, s_sigma1 = 1.0, s_mu2 = 0.0, s_var2 = 1.0;
  std::size_t s_n = 0;
  std::uint64_t s_seed = 0;
  std::string s_out;
  synth->add_option("--lambda1", s_lambda1, "Laplacian mixing weight")->required();
  synth->add_option("--mu1", s_mu1, "Laplacian location");
  synth->add_option("--sigma1", s_sigma1, "Laplacian scale");
  synth->add_option("--mu2", s_mu2, "Gaussian mean");
  synth->add_option("--sigma2-sq", s_var2, "Gaussian variance");
  synth->add_option("--n", s_n, "Number of samples")->required();
  synth->add_option("--seed", s_seed, "Random seed");
  synth->add_option("--out", s_out, "Output sample file")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate supplied mixture parameters");
  std::string eval_input, eval_params;
  CommonFlags eval_flags;
  eval->add_option("input", eval_input, "Delimited trial file")->required();
  eval->add_option("params", eval_params, "JSON parameter or report file")->required();
  add_common(eval, eval_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) return run_fit(fit_input, fit_flags, fit_curves);
    if (batch->parsed()) return run_batch(batch_manifest, batch_flags, batch_jobs);
    if (synth->parsed()) {
      return run_synth(s_lambda1, s_mu1, s_sigma1, s_mu2, s_var2, s_n, s_seed,
                       s_out);
    }
    if (eval->parsed()) return run_eval(eval_input, eval_params, eval_flags);
  } catch (const lgm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return lgm::kExitInternal;
  }
  return lgm::kExitInternal;
}
