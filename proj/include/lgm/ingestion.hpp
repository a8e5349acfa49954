#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lgm {

/// Half-open sample range [start, end), applied before channel selection.
struct SampleWindow {
  std::size_t start = 0;
  std::size_t end = 0;
};

struct ManifestEntry {
  std::string path;
  std::string subject;
  std::string activity;
  std::string trial;
  double sample_rate = 0.0;  // Hz
  std::size_t channel_count = 0;
  std::optional<SampleWindow> window;
};

struct SignalManifest {
  std::vector<ManifestEntry> entries;
};

/// One loaded recording segment: channel-major C x T sample matrix plus the
/// manifest entry it came from.
struct TrialRecord {
  ManifestEntry meta;
  std::vector<std::vector<double>> samples;  // samples[c][t]
  std::size_t channels() const { return samples.size(); }
  std::size_t length() const { return samples.empty() ? 0 : samples[0].size(); }
};

/// Parses the record-jar manifest format: `key: value` lines, records
/// separated by blank lines, `#` comments. Relative trial paths resolve
/// against the manifest's directory. Rejects duplicate
/// (subject, activity, trial) keys.
SignalManifest load_manifest(const std::string& path);

/// Reads one delimited trial file (comma or tab, auto-detected; a line with
/// neither is a single column), one row per time sample, one column per
/// channel. header skips the first line.
TrialRecord load_trial(const ManifestEntry& entry, bool header = false);

/// Same reader for files not described by a manifest; the channel count is
/// taken from the first row.
TrialRecord load_trial_file(const std::string& path, bool header = false);

/// Index and samples of the channel with the largest sum of squares; ties
/// go to the lowest index.
std::pair<std::size_t, std::vector<double>> select_max_energy_channel(
    const TrialRecord& rec);

// Writers used by the synth command and round-trip checks. Values are
// printed with 17 significant digits so finite doubles survive a round trip
// bit-exactly.
void write_samples(const std::string& path, std::span<const double> y);
void write_trial_csv(const std::string& path,
                     const std::vector<std::vector<double>>& channels);

}  // namespace lgm
