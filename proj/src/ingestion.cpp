#include "lgm/ingestion.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lgm/errors.hpp"

namespace lgm {

namespace {

namespace fs = std::filesystem;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view text, const std::string& context) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size()) {
    throw ParseError(context + ": not a number: '" + t + "'");
  }
  return value;
}

std::size_t parse_count(std::string_view text, const std::string& context) {
  const std::string t = trim(text);
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size()) {
    throw ParseError(context + ": not a nonnegative integer: '" + t + "'");
  }
  return value;
}

void finish_entry(ManifestEntry& e, std::set<std::string>& seen_keys,
                  std::vector<ManifestEntry>& out, int first_line,
                  std::set<std::string>& seen_trials) {
  const char* required[] = {"path", "subject", "activity", "trial",
                            "sample_rate", "channels"};
  for (const char* key : required) {
    if (!seen_keys.count(key)) {
      throw ParseError("manifest record starting at line " +
                          std::to_string(first_line) + ": missing field '" +
                          key + "'");
    }
  }
  if (!(e.sample_rate > 0.0)) {
    throw ParseError("manifest record starting at line " +
                        std::to_string(first_line) + ": sample_rate must be > 0");
  }
  if (e.channel_count < 1) {
    throw ParseError("manifest record starting at line " +
                        std::to_string(first_line) + ": channels must be >= 1");
  }
  if (e.window && !(e.window->start < e.window->end)) {
    throw ParseError("manifest record starting at line " +
                        std::to_string(first_line) +
                        ": window start must be < end");
  }
  const std::string key = e.subject + "\x1f" + e.activity + "\x1f" + e.trial;
  if (!seen_trials.insert(key).second) {
    throw DuplicateKey("duplicate manifest key (subject=" + e.subject +
                       ", activity=" + e.activity + ", trial=" + e.trial + ")");
  }
  out.push_back(std::move(e));
  e = ManifestEntry{};
  seen_keys.clear();
}

char detect_delimiter(const std::string& line) {
  if (line.find(',') != std::string::npos) return ',';
  if (line.find('\t') != std::string::npos) return '\t';
  return '\0';  // single column
}

std::vector<std::vector<double>> read_matrix_rows(const std::string& path,
                                                  bool header) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trial file: " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  bool delim_known = false;
  char delim = '\0';
  std::size_t ncols = 0;

  while (std::getline(in, line)) {
    ++lineno;
    if (header && lineno == 1) continue;
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;

    if (!delim_known) {
      delim = detect_delimiter(stripped);
      delim_known = true;
    }

    std::vector<double> row;
    const std::string context = path + ":" + std::to_string(lineno);
    if (delim == '\0') {
      row.push_back(parse_double(stripped, context));
    } else {
      std::size_t start = 0;
      while (true) {
        const std::size_t pos = stripped.find(delim, start);
        const std::string_view cell =
            pos == std::string::npos
                ? std::string_view(stripped).substr(start)
                : std::string_view(stripped).substr(start, pos - start);
        row.push_back(parse_double(cell, context));
        if (pos == std::string::npos) break;
        start = pos + 1;
      }
    }
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw NonFiniteSample(context + ": NaN or infinite sample");
      }
    }
    if (rows.empty()) {
      ncols = row.size();
    } else if (row.size() != ncols) {
      throw ShapeMismatch(context + ": expected " + std::to_string(ncols) +
                          " columns, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": no samples");
  return rows;
}

TrialRecord build_record(ManifestEntry meta,
                         std::vector<std::vector<double>> rows,
                         const std::string& path) {
  if (rows[0].size() != meta.channel_count) {
    throw ShapeMismatch(path + ": expected " +
                        std::to_string(meta.channel_count) + " channels, got " +
                        std::to_string(rows[0].size()));
  }
  std::size_t start = 0, end = rows.size();
  if (meta.window) {
    start = meta.window->start;
    end = meta.window->end;
    if (end > rows.size() || start >= end) {
      throw ShapeMismatch(path + ": window [" + std::to_string(start) + ", " +
                          std::to_string(end) + ") outside " +
                          std::to_string(rows.size()) + " rows");
    }
  }

  TrialRecord rec;
  rec.meta = std::move(meta);
  rec.samples.assign(rec.meta.channel_count,
                     std::vector<double>(end - start));
  for (std::size_t t = start; t < end; ++t) {
    for (std::size_t c = 0; c < rec.meta.channel_count; ++c) {
      rec.samples[c][t - start] = rows[t][c];
    }
  }
  return rec;
}

}  // namespace

SignalManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open manifest: " + path);
  const fs::path base = fs::path(path).parent_path();

  SignalManifest manifest;
  ManifestEntry entry;
  std::set<std::string> keys_in_record;
  std::set<std::string> seen_trials;
  std::string line;
  int lineno = 0;
  int record_first_line = 0;

  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (!stripped.empty() && stripped[0] == '#') continue;
    if (stripped.empty()) {
      if (!keys_in_record.empty()) {
        finish_entry(entry, keys_in_record, manifest.entries,
                     record_first_line, seen_trials);
      }
      continue;
    }

    const std::size_t colon = stripped.find(':');
    if (colon == std::string::npos) {
      throw ParseError(path + ":" + std::to_string(lineno) +
                          ": expected 'key: value'");
    }
    const std::string key = trim(stripped.substr(0, colon));
    const std::string value = trim(stripped.substr(colon + 1));
    const std::string context = path + ":" + std::to_string(lineno);
    if (value.empty()) throw ParseError(context + ": empty value for '" + key + "'");
    if (keys_in_record.empty()) record_first_line = lineno;
    if (!keys_in_record.insert(key).second) {
      throw ParseError(context + ": repeated field '" + key + "'");
    }

    if (key == "path") {
      const fs::path p(value);
      entry.path = p.is_absolute() ? p.string() : (base / p).string();
    } else if (key == "subject") {
      entry.subject = value;
    } else if (key == "activity") {
      entry.activity = value;
    } else if (key == "trial") {
      entry.trial = value;
    } else if (key == "sample_rate") {
      entry.sample_rate = parse_double(value, context);
    } else if (key == "channels") {
      entry.channel_count = parse_count(value, context);
    } else if (key == "window") {
      std::istringstream ss(value);
      std::string a, b;
      if (!(ss >> a >> b)) {
        throw ParseError(context + ": window needs two sample indices");
      }
      entry.window = SampleWindow{parse_count(a, context), parse_count(b, context)};
    } else {
      throw ParseError(context + ": unknown field '" + key + "'");
    }
  }
  if (!keys_in_record.empty()) {
    finish_entry(entry, keys_in_record, manifest.entries, record_first_line,
                 seen_trials);
  }
  return manifest;
}

TrialRecord load_trial(const ManifestEntry& entry, bool header) {
  return build_record(entry, read_matrix_rows(entry.path, header), entry.path);
}

TrialRecord load_trial_file(const std::string& path, bool header) {
  auto rows = read_matrix_rows(path, header);
  ManifestEntry meta;
  meta.path = path;
  meta.channel_count = rows[0].size();
  meta.sample_rate = 1.0;
  return build_record(std::move(meta), std::move(rows), path);
}

std::pair<std::size_t, std::vector<double>> select_max_energy_channel(
    const TrialRecord& rec) {
  if (rec.samples.empty()) throw EmptyInput("select_max_energy_channel: no channels");
  std::size_t best = 0;
  double best_energy = -1.0;
  for (std::size_t c = 0; c < rec.samples.size(); ++c) {
    double energy = 0.0;
    for (double v : rec.samples[c]) energy += v * v;
    if (energy > best_energy) {
      best_energy = energy;
      best = c;
    }
  }
  return {best, rec.samples[best]};
}

void write_samples(const std::string& path, std::span<const double> y) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ParseError("cannot open for writing: " + path);
  for (double v : y) std::fprintf(f, "%.17g\n", v);
  std::fclose(f);
}

void write_trial_csv(const std::string& path,
                     const std::vector<std::vector<double>>& channels) {
  if (channels.empty()) throw EmptyInput("write_trial_csv: no channels");
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ParseError("cannot open for writing: " + path);
  const std::size_t t_len = channels[0].size();
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t c = 0; c < channels.size(); ++c) {
      std::fprintf(f, c == 0 ? "%.17g" : ",%.17g", channels[c][t]);
    }
    std::fputc('\n', f);
  }
  std::fclose(f);
}

}  // namespace lgm
