#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "sitsrnn/error.hpp"
#include "sitsrnn/numerics.hpp"
#include "sitsrnn/parallel.hpp"

namespace sitsrnn {

// One labeled trajectory: T feature vectors of dimension D.
struct TimeSeriesSample {
  std::string id;
  std::size_t label = 0;
  std::vector<Vector> steps;

  friend bool operator==(const TimeSeriesSample&, const TimeSeriesSample&) = default;
};

// Where a dataset came from: a file path or the generator seed and config.
struct Provenance {
  std::string source;
  std::optional<std::uint64_t> seed;
  std::string generator;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Dataset {
  std::vector<TimeSeriesSample> samples;
  std::size_t num_timestamps = 0;
  std::size_t num_features = 0;
  std::vector<std::string> class_names;
  Provenance provenance;

  std::size_t size() const noexcept { return samples.size(); }
  std::size_t num_classes() const noexcept { return class_names.size(); }

  std::vector<std::size_t> labels() const {
    std::vector<std::size_t> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.label);
    return out;
  }

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(class_names.size(), 0);
    for (const auto& s : samples) ++counts.at(s.label);
    return counts;
  }

  // Throws ShapeError / InvalidArgument when any invariant is broken.
  void validate() const {
    if (num_timestamps == 0 || num_features == 0) {
      throw ShapeError("data: dataset needs T >= 1 and D >= 1");
    }
    for (const auto& s : samples) {
      if (s.label >= class_names.size()) {
        throw InvalidArgument("data: sample '" + s.id + "' has label " + std::to_string(s.label) +
                              " outside [0, " + std::to_string(class_names.size()) + ")");
      }
      if (s.steps.size() != num_timestamps) {
        throw ShapeError("data: sample '" + s.id + "' has " + std::to_string(s.steps.size()) +
                         " timestamps, dataset declares T=" + std::to_string(num_timestamps));
      }
      for (const auto& step : s.steps) {
        if (step.size() != num_features) {
          throw ShapeError("data: sample '" + s.id + "' has a step of dimension " +
                           std::to_string(step.size()) + ", dataset declares D=" +
                           std::to_string(num_features));
        }
        if (!all_finite(step)) throw InvalidArgument("data: sample '" + s.id + "' is not finite");
      }
    }
  }

  // At least two classes populated; required by every training routine.
  void require_trainable(std::string_view who) const {
    if (samples.empty()) throw InvalidArgument(std::string(who) + ": empty dataset");
    std::size_t populated = 0;
    for (auto c : class_counts()) populated += c > 0 ? 1 : 0;
    if (populated < 2) {
      throw InvalidArgument(std::string(who) + ": need at least 2 populated classes, got " +
                            std::to_string(populated));
    }
  }

  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.num_timestamps = num_timestamps;
    out.num_features = num_features;
    out.class_names = class_names;
    out.provenance = provenance;
    out.samples.reserve(indices.size());
    for (auto i : indices) out.samples.push_back(samples.at(i));
    return out;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// ---------------------------------------------------------------------------
// Manifest and CSV I/O

struct DatasetManifest {
  int version = 1;
  std::size_t num_timestamps = 0;
  std::size_t num_features = 0;
  std::vector<std::string> class_names;
  std::optional<std::uint64_t> seed;
  std::string generator;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string read_text_file(const std::string& path, std::string_view who) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(std::string(who) + ": cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void check_class_name(const std::string& name) {
  if (name.empty() || name.find_first_of(",\n\r=") != std::string::npos) {
    throw FormatError("data: invalid class name '" + name + "'");
  }
}

}  // namespace detail

inline DatasetManifest parse_manifest(std::string_view text) {
  DatasetManifest m;
  bool have_version = false, have_t = false, have_d = false, have_classes = false;
  std::size_t line_no = 0;
  for (auto raw : detail::split(text, '\n')) {
    ++line_no;
    const std::string line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("data: manifest line " + std::to_string(line_no) + " is not key=value");
    }
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    auto need_count = [&](std::string_view k) {
      auto v = detail::parse_int<std::size_t>(value);
      if (!v || *v == 0) {
        throw FormatError("data: manifest " + std::string(k) + " must be a positive integer, got '" +
                          value + "'");
      }
      return *v;
    };
    if (key == "version") {
      auto v = detail::parse_int<int>(value);
      if (!v) throw FormatError("data: manifest version '" + value + "' is not an integer");
      if (*v != 1) throw FormatError("data: unsupported manifest version " + value);
      m.version = *v;
      have_version = true;
    } else if (key == "T") {
      m.num_timestamps = need_count("T");
      have_t = true;
    } else if (key == "D") {
      m.num_features = need_count("D");
      have_d = true;
    } else if (key == "classes") {
      for (auto name : detail::split(value, ',')) {
        m.class_names.push_back(detail::trim(name));
        detail::check_class_name(m.class_names.back());
      }
      have_classes = true;
    } else if (key == "seed") {
      auto v = detail::parse_int<std::uint64_t>(value);
      if (!v) throw FormatError("data: manifest seed '" + value + "' is not an integer");
      m.seed = *v;
    } else if (key == "generator") {
      m.generator = value;
    }
    // Unknown keys are tolerated so run manifests can carry extra metadata.
  }
  if (!have_version) throw FormatError("data: manifest lacks 'version'");
  if (!have_t || !have_d) throw FormatError("data: manifest must declare T and D");
  if (!have_classes || m.class_names.empty()) throw FormatError("data: manifest lacks 'classes'");
  for (std::size_t i = 0; i < m.class_names.size(); ++i) {
    for (std::size_t j = i + 1; j < m.class_names.size(); ++j) {
      if (m.class_names[i] == m.class_names[j]) {
        throw FormatError("data: duplicate class name '" + m.class_names[i] + "'");
      }
    }
  }
  return m;
}

inline std::string format_manifest(const DatasetManifest& m) {
  std::ostringstream out;
  out << "version=" << m.version << '\n';
  out << "T=" << m.num_timestamps << '\n';
  out << "D=" << m.num_features << '\n';
  out << "classes=";
  for (std::size_t i = 0; i < m.class_names.size(); ++i) {
    out << (i ? "," : "") << m.class_names[i];
  }
  out << '\n';
  if (m.seed) out << "seed=" << *m.seed << '\n';
  if (!m.generator.empty()) out << "generator=" << m.generator << '\n';
  return out.str();
}

// Parses header-free CSV rows `id,label,f(0,0)..f(T-1,D-1)` (timestep-major).
inline Dataset parse_dataset(std::string_view csv, const DatasetManifest& m,
                             std::string source = {}) {
  if (m.num_features != 0 &&
      m.num_timestamps > std::numeric_limits<std::size_t>::max() / m.num_features) {
    throw FormatError("data: T*D overflows (T=" + std::to_string(m.num_timestamps) +
                      ", D=" + std::to_string(m.num_features) + ")");
  }
  const std::size_t width = m.num_timestamps * m.num_features;
  std::map<std::string, std::size_t, std::less<>> label_index;
  for (std::size_t k = 0; k < m.class_names.size(); ++k) label_index[m.class_names[k]] = k;

  Dataset ds;
  ds.num_timestamps = m.num_timestamps;
  ds.num_features = m.num_features;
  ds.class_names = m.class_names;
  ds.provenance = Provenance{std::move(source), m.seed, m.generator};

  std::size_t row_no = 0;
  for (auto raw : detail::split(csv, '\n')) {
    ++row_no;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (detail::trim(raw).empty()) continue;
    const auto fields = detail::split(raw, ',');
    if (fields.size() < 2 || fields.size() - 2 != width) {
      throw FormatError("data: row " + std::to_string(row_no) + " has " +
                        std::to_string(fields.size() < 2 ? 0 : fields.size() - 2) +
                        " feature fields, expected " + std::to_string(width));
    }
    TimeSeriesSample s;
    s.id = detail::trim(fields[0]);
    const std::string label = detail::trim(fields[1]);
    const auto it = label_index.find(label);
    if (it == label_index.end()) {
      throw FormatError("data: row " + std::to_string(row_no) + " has unknown label '" + label + "'");
    }
    s.label = it->second;
    s.steps.assign(m.num_timestamps, Vector(m.num_features));
    for (std::size_t j = 0; j < width; ++j) {
      const auto v = detail::parse_double(detail::trim(fields[2 + j]));
      if (!v) {
        throw FormatError("data: row " + std::to_string(row_no) + " field " + std::to_string(j + 3) +
                          " is not a finite number: '" + std::string(fields[2 + j]) + "'");
      }
      s.steps[j / m.num_features][j % m.num_features] = *v;
    }
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw FormatError("data: no samples");
  return ds;
}

inline Dataset load_dataset(const std::string& data_path, const std::string& manifest_path) {
  const auto manifest = parse_manifest(detail::read_text_file(manifest_path, "data"));
  return parse_dataset(detail::read_text_file(data_path, "data"), manifest, data_path);
}

inline DatasetManifest manifest_of(const Dataset& ds) {
  DatasetManifest m;
  m.num_timestamps = ds.num_timestamps;
  m.num_features = ds.num_features;
  m.class_names = ds.class_names;
  m.seed = ds.provenance.seed;
  m.generator = ds.provenance.generator;
  return m;
}

inline std::string format_dataset_csv(const Dataset& ds) {
  std::string out;
  for (const auto& s : ds.samples) {
    out += s.id;
    out += ',';
    out += ds.class_names.at(s.label);
    for (const auto& step : s.steps) {
      for (double v : step) {
        out += ',';
        out += detail::format_double(v);
      }
    }
    out += '\n';
  }
  return out;
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io: cannot write '" + path + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("io: write failed for '" + path + "'");
}

inline void save_dataset(const Dataset& ds, const std::string& data_path,
                         const std::string& manifest_path) {
  ds.validate();
  for (const auto& name : ds.class_names) detail::check_class_name(name);
  write_text_file(data_path, format_dataset_csv(ds));
  write_text_file(manifest_path, format_manifest(manifest_of(ds)));
}

// ---------------------------------------------------------------------------
// Preprocessing

struct MaskedSeries {
  Vector values;
  std::vector<bool> valid;
};

// Linear interpolation across invalid entries by timestamp index; leading and
// trailing gaps copy the nearest valid value.
inline Vector gap_fill_series(const MaskedSeries& series) {
  const auto& v = series.values;
  if (v.size() != series.valid.size()) {
    throw ShapeError("data: gap fill needs equal-length values and mask (" +
                     std::to_string(v.size()) + " vs " + std::to_string(series.valid.size()) + ")");
  }
  std::vector<std::size_t> anchors;
  for (std::size_t t = 0; t < v.size(); ++t) {
    if (series.valid[t]) {
      if (!std::isfinite(v[t])) throw InvalidArgument("data: valid entry is not finite");
      anchors.push_back(t);
    }
  }
  if (anchors.empty()) throw InvalidArgument("data: gap fill needs at least one valid entry");

  Vector out(v.size());
  for (std::size_t t = 0; t < anchors.front(); ++t) out[t] = v[anchors.front()];
  for (std::size_t t = anchors.back(); t < v.size(); ++t) out[t] = v[anchors.back()];
  for (std::size_t a = 0; a + 1 < anchors.size(); ++a) {
    const std::size_t lo = anchors[a], hi = anchors[a + 1];
    out[lo] = v[lo];
    for (std::size_t t = lo + 1; t < hi; ++t) {
      const double w = static_cast<double>(t - lo) / static_cast<double>(hi - lo);
      out[t] = v[lo] + w * (v[hi] - v[lo]);
    }
  }
  return out;
}

struct BandReflectances {
  double blue = 0.0;
  double green = 0.0;
  double red = 0.0;
  double nir = 0.0;
};

struct RadiometricIndices {
  double ndvi = 0.0;
  double ndwi = 0.0;
  double bi = 0.0;
  // Set when the index denominator was zero and the index was defined as 0.
  bool ndvi_degenerate = false;
  bool ndwi_degenerate = false;
};

// NDVI = (nir-red)/(nir+red), NDWI (McFeeters) = (green-nir)/(green+nir),
// BI = sqrt((red^2 + nir^2) / 2).
inline RadiometricIndices compute_indices(const BandReflectances& b) {
  if (!std::isfinite(b.blue) || !std::isfinite(b.green) || !std::isfinite(b.red) ||
      !std::isfinite(b.nir)) {
    throw InvalidArgument("data: band reflectances must be finite");
  }
  RadiometricIndices r;
  const double vis = b.nir + b.red;
  if (vis == 0.0) {
    r.ndvi_degenerate = true;
  } else {
    r.ndvi = (b.nir - b.red) / vis;
  }
  const double water = b.green + b.nir;
  if (water == 0.0) {
    r.ndwi_degenerate = true;
  } else {
    r.ndwi = (b.green - b.nir) / water;
  }
  r.bi = std::sqrt((b.red * b.red + b.nir * b.nir) / 2.0);
  return r;
}

// Per-(timestep, feature) z-score parameters.
struct Normalizer {
  Matrix mean;    // T x D
  Matrix stddev;  // T x D, entries below 1e-12 replaced by 1

  std::size_t num_timestamps() const noexcept { return mean.rows(); }
  std::size_t num_features() const noexcept { return mean.cols(); }

  friend bool operator==(const Normalizer&, const Normalizer&) = default;
};

inline Normalizer fit_normalizer(const Dataset& train) {
  if (train.samples.empty()) throw InvalidArgument("data: cannot fit normalizer on empty split");
  const std::size_t t_len = train.num_timestamps, d = train.num_features;
  Normalizer n{Matrix(t_len, d), Matrix(t_len, d)};
  const double count = static_cast<double>(train.samples.size());
  for (const auto& s : train.samples) {
    for (std::size_t t = 0; t < t_len; ++t) {
      for (std::size_t f = 0; f < d; ++f) n.mean(t, f) += s.steps[t][f];
    }
  }
  for (auto& m : n.mean.values()) m /= count;
  for (const auto& s : train.samples) {
    for (std::size_t t = 0; t < t_len; ++t) {
      for (std::size_t f = 0; f < d; ++f) {
        const double dev = s.steps[t][f] - n.mean(t, f);
        n.stddev(t, f) += dev * dev;
      }
    }
  }
  for (auto& sd : n.stddev.values()) {
    sd = std::sqrt(sd / count);
    if (sd < 1e-12) sd = 1.0;
  }
  return n;
}

inline TimeSeriesSample apply_normalizer(const Normalizer& n, const TimeSeriesSample& s) {
  if (s.steps.size() != n.num_timestamps() ||
      (!s.steps.empty() && s.steps.front().size() != n.num_features())) {
    throw ShapeError("data: normalizer fitted on T=" + std::to_string(n.num_timestamps()) +
                     ", D=" + std::to_string(n.num_features()) + " cannot transform sample with T=" +
                     std::to_string(s.steps.size()) + ", D=" +
                     std::to_string(s.steps.empty() ? 0 : s.steps.front().size()));
  }
  TimeSeriesSample out = s;
  for (std::size_t t = 0; t < out.steps.size(); ++t) {
    for (std::size_t f = 0; f < out.steps[t].size(); ++f) {
      out.steps[t][f] = (out.steps[t][f] - n.mean(t, f)) / n.stddev(t, f);
    }
  }
  return out;
}

inline Dataset apply_normalizer(const Normalizer& n, const Dataset& ds) {
  if (ds.num_timestamps != n.num_timestamps() || ds.num_features != n.num_features()) {
    throw ShapeError("data: normalizer fitted on T=" + std::to_string(n.num_timestamps()) +
                     ", D=" + std::to_string(n.num_features()) + " cannot transform dataset with T=" +
                     std::to_string(ds.num_timestamps) + ", D=" + std::to_string(ds.num_features));
  }
  Dataset out = ds;
  for (auto& s : out.samples) s = apply_normalizer(n, s);
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic SITS-shaped data
//
// Each class is an ordered pair of amplitude signatures (vectors in R^D)
// emitted as two Gaussian bumps in time. Pairs that share signatures differ
// only in temporal order. Every sample shifts the whole motif by a uniform
// integer offset in [-motif_jitter, motif_jitter] and adds i.i.d. Gaussian
// noise.

struct SyntheticConfig {
  std::size_t num_classes = 9;
  std::size_t samples_per_class = 300;
  // Optional per-class cardinalities; overrides samples_per_class when set.
  std::vector<std::size_t> class_counts;
  std::size_t num_timestamps = 23;
  std::size_t num_features = 10;
  std::size_t motif_jitter = 4;
  double noise_sigma = 0.3;
  std::uint64_t seed = 7;
  std::string name = "custom";

  std::size_t count_for(std::size_t k) const {
    return class_counts.empty() ? samples_per_class : class_counts.at(k);
  }

  // Single-line echo; enough to regenerate the dataset.
  std::string describe() const {
    std::ostringstream out;
    out << "synthetic:" << name << ";classes=" << num_classes << ";T=" << num_timestamps
        << ";D=" << num_features << ";jitter=" << motif_jitter
        << ";sigma=" << detail::format_double(noise_sigma) << ";counts=";
    for (std::size_t k = 0; k < num_classes; ++k) out << (k ? ":" : "") << count_for(k);
    return out.str();
  }
};

// 9 near-balanced classes over 23 dates of 10 features.
inline SyntheticConfig reunion_like_config(std::uint64_t seed) {
  SyntheticConfig c;
  c.name = "reunion-like";
  c.num_classes = 9;
  c.samples_per_class = 300;
  c.num_timestamps = 23;
  c.num_features = 10;
  c.motif_jitter = 4;
  c.noise_sigma = 0.3;
  c.seed = seed;
  return c;
}

// 11 classes over 3 dates of 10 features with a skewed cardinality profile;
// class 3 sits at exactly 1% of the 1500 samples.
inline SyntheticConfig thau_like_config(std::uint64_t seed) {
  SyntheticConfig c;
  c.name = "thau-like";
  c.num_classes = 11;
  c.class_counts = {60, 240, 55, 15, 68, 380, 245, 23, 30, 24, 360};
  c.num_timestamps = 3;
  c.num_features = 10;
  c.motif_jitter = 1;
  c.noise_sigma = 0.3;
  c.seed = seed;
  return c;
}

namespace detail {

struct ClassMotif {
  std::size_t first = 0;
  std::size_t second = 0;
};

// Signature amplitude relative to unit noise. Kept low so that no single
// timestep separates the classes.
inline constexpr double kSignatureScale = 0.5;

// Every ordered pair from the smallest signature pool with pool^2 >= K, so
// classes (a, b) and (b, a) differ only in the order of their two events and
// (a, a) repeats one event.
inline std::vector<ClassMotif> motif_pairs(std::size_t num_classes) {
  std::size_t pool = 2;
  while (pool * pool < num_classes) ++pool;
  std::vector<ClassMotif> out;
  for (std::size_t a = 0; a < pool && out.size() < num_classes; ++a) {
    for (std::size_t b = 0; b < pool && out.size() < num_classes; ++b) out.push_back({a, b});
  }
  return out;
}

}  // namespace detail

// Class k is two Gaussian bumps (width one step) a quarter of the series
// apart, carrying signatures motif_pairs(K)[k]. Each sample shifts the whole
// motif by an integer drawn from [-jitter, jitter] and adds N(0, sigma^2)
// noise to every value.
inline Dataset generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.num_classes < 2) throw InvalidArgument("data: synthetic data needs >= 2 classes");
  if (cfg.num_timestamps < 2) throw InvalidArgument("data: synthetic data needs T >= 2");
  if (cfg.num_features < 1) throw InvalidArgument("data: synthetic data needs D >= 1");
  if (cfg.motif_jitter >= cfg.num_timestamps) {
    throw InvalidArgument("data: motif_jitter " + std::to_string(cfg.motif_jitter) +
                          " must be < T=" + std::to_string(cfg.num_timestamps));
  }
  if (!cfg.class_counts.empty() && cfg.class_counts.size() != cfg.num_classes) {
    throw InvalidArgument("data: class_counts has " + std::to_string(cfg.class_counts.size()) +
                          " entries for " + std::to_string(cfg.num_classes) + " classes");
  }
  if (!(cfg.noise_sigma >= 0.0) || !std::isfinite(cfg.noise_sigma)) {
    throw InvalidArgument("data: noise_sigma must be finite and >= 0");
  }

  const std::size_t t_len = cfg.num_timestamps, d = cfg.num_features;
  const auto pairs = detail::motif_pairs(cfg.num_classes);
  std::size_t num_signatures = 0;
  for (const auto& p : pairs) num_signatures = std::max({num_signatures, p.first + 1, p.second + 1});

  std::mt19937_64 template_rng(derive_seed(cfg.seed, 1));
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  std::vector<Vector> signatures(num_signatures, Vector(d));
  for (auto& sig : signatures) {
    for (double& a : sig) a = detail::kSignatureScale * unit_normal(template_rng);
  }

  const double centre = 0.5 * static_cast<double>(t_len - 1);
  const double gap = std::max(1.0, static_cast<double>(t_len) / 4.0);
  const double width = 1.0;
  const double first_peak = centre - 0.5 * gap;
  const double second_peak = centre + 0.5 * gap;
  auto bump = [width](double dt) { return std::exp(-0.5 * (dt / width) * (dt / width)); };

  Dataset ds;
  ds.num_timestamps = t_len;
  ds.num_features = d;
  for (std::size_t k = 0; k < cfg.num_classes; ++k) ds.class_names.push_back("class" + std::to_string(k));
  ds.provenance = Provenance{"generator", cfg.seed, cfg.describe()};

  std::mt19937_64 sample_rng(derive_seed(cfg.seed, 2));
  const auto jitter = static_cast<long long>(cfg.motif_jitter);
  std::uniform_int_distribution<long long> shift_dist(-jitter, jitter);
  std::size_t serial = 0;
  for (std::size_t k = 0; k < cfg.num_classes; ++k) {
    const Vector& a = signatures[pairs[k].first];
    const Vector& b = signatures[pairs[k].second];
    for (std::size_t i = 0; i < cfg.count_for(k); ++i) {
      TimeSeriesSample s;
      s.id = "s" + std::to_string(serial++);
      s.label = k;
      const double shift = static_cast<double>(shift_dist(sample_rng));
      s.steps.assign(t_len, Vector(d));
      for (std::size_t t = 0; t < t_len; ++t) {
        const double tt = static_cast<double>(t) - shift;
        const double wa = bump(tt - first_peak), wb = bump(tt - second_peak);
        for (std::size_t f = 0; f < d; ++f) {
          const double noise = cfg.noise_sigma > 0.0 ? cfg.noise_sigma * unit_normal(sample_rng) : 0.0;
          s.steps[t][f] = a[f] * wa + b[f] * wb + noise;
        }
      }
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

}  // namespace sitsrnn
