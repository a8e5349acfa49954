#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lgm/em.hpp"
#include "lgm/evaluation.hpp"
#include "lgm/ingestion.hpp"

namespace lgm {

struct PipelineConfig {
  EmConfig em;
  std::size_t bins = kAutoBins;
  std::uint64_t seed = 0;
  bool header = false;
};

struct GofSummary {
  double r_squared = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// One trial's full evaluation: the three fitted models plus the KLD /
/// goodness-of-fit / LRT battery, all computed on the identical sample
/// array (hash recorded).
struct EvalReport {
  std::string subject;
  std::string activity;
  std::string trial;
  std::size_t channel = 0;
  std::size_t n_samples = 0;
  std::uint64_t hash = 0;

  LgmParams lgm;
  LaplacianParams laplacian;
  GaussianParams gaussian;

  KldResult kld_lgm, kld_laplacian, kld_gaussian;
  GofSummary gof_lgm, gof_laplacian, gof_gaussian;
  LrtResult lrt_vs_laplacian, lrt_vs_gaussian;

  int em_iterations = 0;
  bool em_converged = false;
};

/// Trial-averaged metric laid out as subjects x activities. Cells average
/// whatever trials are present; empty cells are NaN with count zero.
struct HeatmapMatrix {
  std::vector<std::string> row_labels;  // subjects
  std::vector<std::string> col_labels;  // activities
  std::vector<std::vector<double>> values;
  std::vector<std::vector<std::size_t>> counts;
  std::string metric_name;
};

/// Fits all three models on one sample array and runs the full evaluation
/// battery. Metadata fields are copied into the report.
EvalReport evaluate_samples(std::span<const double> y,
                            const PipelineConfig& cfg, std::string subject,
                            std::string activity, std::string trial,
                            std::size_t channel);

/// Evaluation with externally supplied mixture parameters: no mixture
/// refit, but the LRT nulls are refitted on the data as the test requires.
EvalReport evaluate_with_params(std::span<const double> y,
                                const LgmParams& params,
                                const PipelineConfig& cfg, std::string subject,
                                std::string activity, std::string trial,
                                std::size_t channel);

// Single-line JSON record for a report, and its inverse.
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

/// Parses an LGM parameter file: either a bare parameter object or a full
/// report (whose "lgm" object is used).
LgmParams params_from_json_file(const std::string& path);

/// Plot-ready curve table: bin centers, empirical density, and the three
/// model densities.
void write_curves_csv(const std::string& path, const EmpiricalPdf& hist,
                      const LgmParams& lgm, const LaplacianParams& lap,
                      const GaussianParams& gauss);

struct BatchFailure {
  ManifestEntry entry;
  std::string message;
};

struct BatchResult {
  std::vector<EvalReport> reports;          // manifest order, failures omitted
  std::vector<BatchFailure> failures;       // manifest order
  std::vector<HeatmapMatrix> heatmaps;      // kld x 3 models, lambda1
};

/// Runs the whole manifest through the pipeline on a small work pool.
/// Per-trial seeds are derived from the batch seed and the trial key, so
/// results do not depend on scheduling. Individual trial failures are
/// collected, not fatal.
BatchResult run_batch(const SignalManifest& manifest, const PipelineConfig& cfg,
                      int jobs);

/// Builds the subjects x activities trial average of one metric.
HeatmapMatrix build_heatmap(const std::vector<EvalReport>& reports,
                            const std::string& metric_name);

void write_heatmap_csv(const std::string& path, const HeatmapMatrix& hm);
void write_heatmap_counts_csv(const std::string& path, const HeatmapMatrix& hm);

/// Writes every batch artifact (reports, heatmaps, averages, failures)
/// under out_dir. Returns the number of failed trials.
std::size_t write_batch_outputs(const BatchResult& batch,
                                const std::string& out_dir);

}  // namespace lgm
