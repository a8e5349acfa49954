#include "lgm/ingestion.hpp"

#include <filesystem>
#include <fstream>
#include <random>

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
           ("lgm_ingest_" + std::to_string(++counter) + "_" +
            std::to_string(static_cast<unsigned>(std::random_device{}())));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& content) const {
    const fs::path p = path / name;
    std::ofstream out(p);
    out << content;
    return p.string();
  }
};

}  // namespace

TEST_CASE("load_manifest: two records with metadata") {
  TempDir tmp;
  tmp.file("s1_a1_t1.csv", "0.0\n");
  tmp.file("s1_a1_t2.csv", "0.0\n");
  const std::string manifest = tmp.file("manifest.txt",
                                        "# benchmark export\n"
                                        "path: s1_a1_t1.csv\n"
                                        "subject: s1\n"
                                        "activity: a1\n"
                                        "trial: t1\n"
                                        "sample_rate: 2000\n"
                                        "channels: 12\n"
                                        "window: 6000 16000\n"
                                        "\n"
                                        "path: s1_a1_t2.csv\n"
                                        "subject: s1\n"
                                        "activity: a1\n"
                                        "trial: t2\n"
                                        "sample_rate: 2000\n"
                                        "channels: 12\n");
  const SignalManifest m = load_manifest(manifest);
  REQUIRE(m.entries.size() == 2);
  CHECK(m.entries[0].subject == "s1");
  CHECK(m.entries[0].sample_rate == 2000.0);
  CHECK(m.entries[0].channel_count == 12);
  REQUIRE(m.entries[0].window.has_value());
  CHECK(m.entries[0].window->start == 6000);
  CHECK(m.entries[0].window->end == 16000);
  CHECK_FALSE(m.entries[1].window.has_value());
  // relative paths resolve against the manifest directory
  CHECK(fs::path(m.entries[0].path).is_absolute());
}

TEST_CASE("load_manifest: empty file is a valid empty manifest") {
  TempDir tmp;
  const SignalManifest m = load_manifest(tmp.file("empty.txt", "\n# nothing\n"));
  CHECK(m.entries.empty());
}

TEST_CASE("load_manifest: error paths") {
  TempDir tmp;
  CHECK_THROWS_AS(load_manifest((tmp.path / "missing.txt").string()),
                  ParseError);
  CHECK_THROWS_AS(
      load_manifest(tmp.file("m1.txt", "path: a.csv\nsubject: s\n")),
      ParseError);  // missing fields
  CHECK_THROWS_AS(load_manifest(tmp.file("m2.txt",
                                         "path: a.csv\nsubject: s\n"
                                         "activity: a\ntrial: t\n"
                                         "sample_rate: fast\nchannels: 2\n")),
                  ParseError);  // non-numeric rate
  CHECK_THROWS_AS(load_manifest(tmp.file("m3.txt",
                                         "path: a.csv\nsubject: s\n"
                                         "activity: a\ntrial: t\n"
                                         "sample_rate: 100\nchannels: 2\n"
                                         "color: red\n")),
                  ParseError);  // unknown field
  CHECK_THROWS_AS(load_manifest(tmp.file("m4.txt",
                                         "path: a.csv\nsubject: s\n"
                                         "activity: a\ntrial: t\n"
                                         "sample_rate: 100\nchannels: 2\n"
                                         "window: 9 4\n")),
                  ParseError);  // inverted window

  // error messages carry file and line context
  try {
    load_manifest(tmp.file("m6.txt",
                           "path: a.csv\nsubject: s\n"
                           "activity: a\ntrial: t\n"
                           "sample_rate: fast\nchannels: 2\n"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("m6.txt:5") != std::string::npos);
  }
  const std::string dup =
      "path: a.csv\nsubject: s\nactivity: a\ntrial: t\n"
      "sample_rate: 100\nchannels: 1\n\n"
      "path: b.csv\nsubject: s\nactivity: a\ntrial: t\n"
      "sample_rate: 100\nchannels: 1\n";
  CHECK_THROWS_AS(load_manifest(tmp.file("m5.txt", dup)), DuplicateKey);
}

TEST_CASE("load_trial: shapes, windows, delimiters") {
  TempDir tmp;
  ManifestEntry entry;
  entry.subject = "s";
  entry.activity = "a";
  entry.trial = "t";
  entry.sample_rate = 100.0;
  entry.channel_count = 2;

  entry.path = tmp.file("zeros.csv", "0,0\n0,0\n0,0\n");
  const TrialRecord rec = load_trial(entry);
  CHECK(rec.channels() == 2);
  CHECK(rec.length() == 3);

  entry.window = SampleWindow{1, 2};
  const TrialRecord windowed = load_trial(entry);
  CHECK(windowed.channels() == 2);
  CHECK(windowed.length() == 1);

  entry.window.reset();
  entry.path = tmp.file("tabs.tsv", "1\t2\n3\t4\n");
  const TrialRecord tabs = load_trial(entry);
  CHECK(tabs.samples[0] == std::vector<double>{1.0, 3.0});
  CHECK(tabs.samples[1] == std::vector<double>{2.0, 4.0});

  entry.channel_count = 1;
  entry.path = tmp.file("single.txt", "1.5\n-2.5\n");
  const TrialRecord single = load_trial(entry);
  CHECK(single.samples[0] == std::vector<double>{1.5, -2.5});

  entry.path = tmp.file("header.csv", "ch0\n7\n8\n");
  const TrialRecord with_header = load_trial(entry, true);
  CHECK(with_header.samples[0] == std::vector<double>{7.0, 8.0});
}

TEST_CASE("load_trial: error paths") {
  TempDir tmp;
  ManifestEntry entry;
  entry.channel_count = 2;
  entry.path = tmp.file("bad.csv", "1,2\n3,oops\n");
  CHECK_THROWS_AS(load_trial(entry), ParseError);

  entry.path = tmp.file("ragged.csv", "1,2\n3\n");
  CHECK_THROWS_AS(load_trial(entry), ShapeMismatch);

  entry.path = tmp.file("narrow.csv", "1\n2\n");
  CHECK_THROWS_AS(load_trial(entry), ShapeMismatch);  // 1 column, 2 expected

  entry.path = tmp.file("nonfinite.csv", "1,2\nnan,4\n");
  CHECK_THROWS_AS(load_trial(entry), NonFiniteSample);

  entry.path = tmp.file("empty.csv", "\n\n");
  CHECK_THROWS_AS(load_trial(entry), ParseError);

  entry.channel_count = 1;
  entry.path = tmp.file("short.csv", "1\n2\n3\n");
  entry.window = SampleWindow{2, 5};
  CHECK_THROWS_AS(load_trial(entry), ShapeMismatch);  // window past the end
}

TEST_CASE("trial files round-trip bit-exactly") {
  TempDir tmp;
  std::mt19937_64 rng(131);
  std::normal_distribution<double> normal(0.0, 1e-3);
  std::vector<std::vector<double>> channels(3, std::vector<double>(40));
  for (auto& ch : channels) {
    for (double& v : ch) v = normal(rng);
  }
  const std::string path = (tmp.path / "roundtrip.csv").string();
  write_trial_csv(path, channels);

  ManifestEntry entry;
  entry.path = path;
  entry.channel_count = 3;
  const TrialRecord rec = load_trial(entry);
  CHECK(rec.samples == channels);
}

TEST_CASE("write_samples round-trips a single column") {
  TempDir tmp;
  std::mt19937_64 rng(137);
  std::normal_distribution<double> normal(2.0, 5.0);
  std::vector<double> y(100);
  for (double& v : y) v = normal(rng);
  const std::string path = (tmp.path / "samples.txt").string();
  write_samples(path, y);
  const TrialRecord rec = load_trial_file(path);
  CHECK(rec.samples[0] == y);
}

TEST_CASE("select_max_energy_channel: argmax with tie-break") {
  TrialRecord rec;
  rec.samples = {{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
  auto [idx, samples] = select_max_energy_channel(rec);
  CHECK(idx == 1);
  CHECK(samples == std::vector<double>{1.0, 1.0, 1.0});

  TrialRecord tie;
  tie.samples = {{1.0, -1.0}, {1.0, -1.0}, {1.0, -1.0}};
  CHECK(select_max_energy_channel(tie).first == 0);
}

TEST_CASE("select_max_energy_channel: brute-force scan and permutation") {
  std::mt19937_64 rng(139);
  std::normal_distribution<double> normal(0.0, 1.0);
  TrialRecord rec;
  rec.samples.assign(4, std::vector<double>(1000));
  for (auto& ch : rec.samples) {
    for (double& v : ch) v = normal(rng);
  }

  std::size_t expected = 0;
  double best = -1.0;
  for (std::size_t c = 0; c < rec.samples.size(); ++c) {
    double e = 0.0;
    for (double v : rec.samples[c]) e += v * v;
    if (e > best) {
      best = e;
      expected = c;
    }
  }
  auto [idx, samples] = select_max_energy_channel(rec);
  CHECK(idx == expected);

  // selected energy dominates every other channel
  double selected_energy = 0.0;
  for (double v : samples) selected_energy += v * v;
  for (const auto& ch : rec.samples) {
    double e = 0.0;
    for (double v : ch) e += v * v;
    CHECK(selected_energy >= e);
  }

  // permuting channels remaps the index but selects the same samples
  TrialRecord rotated;
  rotated.samples = {rec.samples[3], rec.samples[0], rec.samples[1],
                     rec.samples[2]};
  auto [ridx, rsamples] = select_max_energy_channel(rotated);
  CHECK(rsamples == samples);
  CHECK(ridx == (expected + 1) % 4);
}
