#include "lgm/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <doctest.h>

#include "lgm/errors.hpp"

using namespace lgm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("lgm_report_" + std::to_string(++counter) + "_" +
            std::to_string(static_cast<unsigned>(std::random_device{}())));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

PipelineConfig fast_config() {
  PipelineConfig cfg;
  cfg.em.tol = 1e-8;
  cfg.em.max_iter = 200;
  cfg.em.n_restarts = 2;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("evaluate_samples produces a coherent report") {
  const LgmParams gen(0.6, LaplacianParams(0.0, 1.0), GaussianParams(0.0, 9.0));
  const std::vector<double> y = sample_lgm(20000, gen, 211);
  const EvalReport r =
      evaluate_samples(y, fast_config(), "s1", "a2", "t3", 4);

  CHECK(r.subject == "s1");
  CHECK(r.channel == 4);
  CHECK(r.n_samples == y.size());
  CHECK(r.hash == sample_hash(y));
  CHECK(r.lgm.lambda1 == doctest::Approx(0.6).epsilon(0.15));
  CHECK(r.kld_lgm.d_kl <=
        std::min(r.kld_laplacian.d_kl, r.kld_gaussian.d_kl) + 0.01);
  CHECK(r.gof_lgm.r_squared > 0.98);
  CHECK(r.gof_lgm.ci_low <= r.gof_lgm.r_squared);
  CHECK(r.gof_lgm.r_squared <= r.gof_lgm.ci_high);
  CHECK(r.lrt_vs_laplacian.p_value < 0.01);
  CHECK(r.lrt_vs_gaussian.p_value < 0.01);
  CHECK(r.em_iterations >= 1);
}

TEST_CASE("report JSON round trip") {
  const LgmParams gen(0.4, LaplacianParams(0.1, 0.8), GaussianParams(-0.2, 2.0));
  const std::vector<double> y = sample_lgm(5000, gen, 223);
  const EvalReport r = evaluate_samples(y, fast_config(), "s", "a", "t", 0);

  const std::string text = report_to_json(r);
  CHECK(text.back() == '\n');
  const EvalReport back = report_from_json(text);
  CHECK(back.subject == r.subject);
  CHECK(back.hash == r.hash);
  CHECK(back.lgm.lambda1 == r.lgm.lambda1);
  CHECK(back.lgm.gaussian.sigma2_sq == r.lgm.gaussian.sigma2_sq);
  CHECK(back.kld_lgm.d_kl == r.kld_lgm.d_kl);
  CHECK(back.gof_gaussian.ci_high == r.gof_gaussian.ci_high);
  CHECK(back.lrt_vs_gaussian.p_value == r.lrt_vs_gaussian.p_value);
  CHECK(back.em_iterations == r.em_iterations);

  CHECK_THROWS_AS(report_from_json("{not json"), ParseError);
  CHECK_THROWS_AS(report_from_json("{\"subject\":\"s\"}"), ParseError);
}

TEST_CASE("evaluate_with_params reproduces a fit's evaluation numbers") {
  const LgmParams gen(0.5, LaplacianParams(0.0, 1.0), GaussianParams(0.0, 4.0));
  const std::vector<double> y = sample_lgm(8000, gen, 227);
  const PipelineConfig cfg = fast_config();
  const EvalReport fitted = evaluate_samples(y, cfg, "s", "a", "t", 0);
  const EvalReport eval =
      evaluate_with_params(y, fitted.lgm, cfg, "s", "a", "t", 0);

  CHECK(eval.kld_lgm.d_kl == fitted.kld_lgm.d_kl);
  CHECK(eval.kld_laplacian.d_kl == fitted.kld_laplacian.d_kl);
  CHECK(eval.gof_lgm.r_squared == fitted.gof_lgm.r_squared);
  CHECK(eval.lrt_vs_laplacian.t_stat == fitted.lrt_vs_laplacian.t_stat);
  CHECK(eval.lrt_vs_gaussian.p_value == fitted.lrt_vs_gaussian.p_value);
  CHECK(eval.em_iterations == 0);

  // deliberately wrong parameters evaluate strictly worse
  const LgmParams wrong(fitted.lgm.lambda1, fitted.lgm.laplacian,
                        GaussianParams(fitted.lgm.gaussian.mu2,
                                       fitted.lgm.gaussian.sigma2_sq * 100.0));
  const EvalReport worse =
      evaluate_with_params(y, wrong, cfg, "s", "a", "t", 0);
  CHECK(worse.kld_lgm.d_kl > fitted.kld_lgm.d_kl);
}

TEST_CASE("params_from_json_file accepts bare params and full reports") {
  TempDir tmp;
  const fs::path bare = tmp.path / "params.json";
  std::ofstream(bare) << R"({"lambda1":0.25,"mu1":0.5,"sigma1":1.5,)"
                      << R"("mu2":-0.5,"sigma2_sq":2.5})";
  const LgmParams p = params_from_json_file(bare.string());
  CHECK(p.lambda1 == 0.25);
  CHECK(p.lambda2 == 0.75);
  CHECK(p.laplacian.sigma1 == 1.5);

  const LgmParams gen(0.5, LaplacianParams(0.0, 1.0), GaussianParams(0.0, 1.0));
  const std::vector<double> y = sample_lgm(2000, gen, 229);
  const EvalReport r = evaluate_samples(y, fast_config(), "s", "a", "t", 0);
  const fs::path full = tmp.path / "report.json";
  std::ofstream(full) << report_to_json(r);
  const LgmParams q = params_from_json_file(full.string());
  CHECK(q.lambda1 == r.lgm.lambda1);

  CHECK_THROWS_AS(params_from_json_file((tmp.path / "nope.json").string()),
                  ParseError);
  const fs::path broken = tmp.path / "broken.json";
  std::ofstream(broken) << "{\"lambda1\": 0.5}";
  CHECK_THROWS_AS(params_from_json_file(broken.string()), ParseError);
}

TEST_CASE("batch: reports, heatmaps, and averages over a synthetic manifest") {
  TempDir tmp;

  // 2 subjects x 2 activities x 3 trials
  std::ostringstream manifest_text;
  int seed = 0;
  for (const char* subject : {"s1", "s2"}) {
    for (const char* activity : {"a1", "a2"}) {
      for (const char* trial : {"t1", "t2", "t3"}) {
        const std::string name = std::string(subject) + "_" + activity + "_" +
                                 trial + ".csv";
        const LgmParams gen(0.5, LaplacianParams(0.0, 1.0),
                            GaussianParams(0.0, 4.0));
        write_samples((tmp.path / name).string(),
                      sample_lgm(2000, gen, 1000 + seed++));
        manifest_text << "path: " << name << "\nsubject: " << subject
                      << "\nactivity: " << activity << "\ntrial: " << trial
                      << "\nsample_rate: 100\nchannels: 1\n\n";
      }
    }
  }
  const fs::path manifest_path = tmp.path / "manifest.txt";
  std::ofstream(manifest_path) << manifest_text.str();

  const SignalManifest manifest = load_manifest(manifest_path.string());
  PipelineConfig cfg = fast_config();
  cfg.seed = 99;
  const BatchResult batch = run_batch(manifest, cfg, 2);

  CHECK(batch.reports.size() == 12);
  CHECK(batch.failures.empty());
  REQUIRE(batch.heatmaps.size() == 4);

  const HeatmapMatrix& hm = batch.heatmaps[0];
  CHECK(hm.metric_name == "kld_lgm");
  REQUIRE(hm.row_labels == std::vector<std::string>{"s1", "s2"});
  REQUIRE(hm.col_labels == std::vector<std::string>{"a1", "a2"});

  // each cell is the hand average of its three per-trial KLDs
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      double sum = 0.0;
      int n = 0;
      for (const EvalReport& r : batch.reports) {
        if (r.subject == hm.row_labels[i] && r.activity == hm.col_labels[j]) {
          sum += r.kld_lgm.d_kl;
          ++n;
        }
      }
      CHECK(n == 3);
      CHECK(hm.counts[i][j] == 3);
      CHECK(hm.values[i][j] == doctest::Approx(sum / 3.0).epsilon(1e-12));
    }
  }

  // batch runs are deterministic regardless of worker count
  const BatchResult again = run_batch(manifest, cfg, 1);
  REQUIRE(again.reports.size() == batch.reports.size());
  for (std::size_t i = 0; i < batch.reports.size(); ++i) {
    CHECK(again.reports[i].lgm.lambda1 == batch.reports[i].lgm.lambda1);
    CHECK(again.reports[i].kld_lgm.d_kl == batch.reports[i].kld_lgm.d_kl);
  }

  const fs::path out_dir = tmp.path / "out";
  CHECK(write_batch_outputs(batch, out_dir.string()) == 0);
  CHECK(fs::exists(out_dir / "reports" / "s1__a1__t1.json"));
  CHECK(fs::exists(out_dir / "heatmap_kld_lgm.csv"));
  CHECK(fs::exists(out_dir / "heatmap_lambda1.csv"));
  CHECK(fs::exists(out_dir / "avg_kld_by_subject.csv"));
  CHECK(fs::exists(out_dir / "avg_kld_by_activity.csv"));
  CHECK(fs::exists(out_dir / "failures.txt"));

  // the heatmap CSV starts with the activity labels
  const std::string csv = slurp(out_dir / "heatmap_kld_lgm.csv");
  CHECK(csv.rfind("subject,a1,a2\n", 0) == 0);
}

TEST_CASE("batch: individual trial failures are recorded, not fatal") {
  TempDir tmp;
  const LgmParams gen(0.5, LaplacianParams(0.0, 1.0), GaussianParams(0.0, 1.0));
  write_samples((tmp.path / "good.csv").string(), sample_lgm(2000, gen, 503));
  std::ofstream(tmp.path / "bad.csv") << "1.0\nnot_a_number\n";

  std::ofstream(tmp.path / "manifest.txt")
      << "path: good.csv\nsubject: s1\nactivity: a1\ntrial: t1\n"
         "sample_rate: 100\nchannels: 1\n\n"
         "path: bad.csv\nsubject: s1\nactivity: a1\ntrial: t2\n"
         "sample_rate: 100\nchannels: 1\n\n"
         "path: missing.csv\nsubject: s1\nactivity: a1\ntrial: t3\n"
         "sample_rate: 100\nchannels: 1\n";

  const SignalManifest manifest =
      load_manifest((tmp.path / "manifest.txt").string());
  const BatchResult batch = run_batch(manifest, fast_config(), 2);
  CHECK(batch.reports.size() == 1);
  REQUIRE(batch.failures.size() == 2);
  CHECK(batch.failures[0].entry.trial == "t2");
  CHECK(batch.failures[1].entry.trial == "t3");

  const fs::path out_dir = tmp.path / "out";
  CHECK(write_batch_outputs(batch, out_dir.string()) == 2);
  const std::string failures = slurp(out_dir / "failures.txt");
  CHECK(failures.find("t2") != std::string::npos);
  CHECK(failures.find("t3") != std::string::npos);
}

TEST_CASE("curves table has one row per bin") {
  TempDir tmp;
  const LgmParams gen(0.5, LaplacianParams(0.0, 1.0), GaussianParams(0.0, 4.0));
  const std::vector<double> y = sample_lgm(5000, gen, 509);
  const EmpiricalPdf hist = empirical_pdf(y, 40);
  const fs::path path = tmp.path / "curves.csv";
  write_curves_csv(path.string(), hist, gen, gen.laplacian, gen.gaussian);

  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "center,empirical,lgm,laplacian,gaussian");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == hist.bins());
}
