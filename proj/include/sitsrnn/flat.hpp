#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sitsrnn/data.hpp"
#include "sitsrnn/error.hpp"
#include "sitsrnn/model.hpp"
#include "sitsrnn/numerics.hpp"

namespace sitsrnn {

// One fixed-length feature vector with its class, as consumed by the forest
// and SVM baselines.
struct FlatSample {
  Vector features;
  std::size_t label = 0;
};

// Concatenates the timesteps of every sample (timestep-major, the same order
// as the data CSV), giving T*D features.
inline std::vector<FlatSample> flatten(const Dataset& ds) {
  std::vector<FlatSample> out;
  out.reserve(ds.size());
  for (const auto& s : ds.samples) {
    FlatSample f;
    f.label = s.label;
    f.features.reserve(ds.num_timestamps * ds.num_features);
    for (const auto& step : s.steps) f.features.insert(f.features.end(), step.begin(), step.end());
    out.push_back(std::move(f));
  }
  return out;
}

inline std::vector<FlatSample> flatten(const FeatureTable& table) {
  std::vector<FlatSample> out;
  out.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) out.push_back({table.rows[i], table.labels[i]});
  return out;
}

// Validates a training set and returns its feature count.
inline std::size_t check_flat_samples(std::span<const FlatSample> samples, std::size_t num_classes,
                                      std::string_view who) {
  if (samples.empty()) throw InvalidArgument(std::string(who) + ": empty training set");
  const std::size_t f = samples.front().features.size();
  if (f == 0) throw ShapeError(std::string(who) + ": samples have no features");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].features.size() != f) {
      throw ShapeError(std::string(who) + ": sample " + std::to_string(i) + " has " +
                       std::to_string(samples[i].features.size()) + " features, expected " +
                       std::to_string(f));
    }
    if (samples[i].label >= num_classes) {
      throw InvalidArgument(std::string(who) + ": sample " + std::to_string(i) + " has label " +
                            std::to_string(samples[i].label) + " >= " + std::to_string(num_classes));
    }
    if (!all_finite(samples[i].features)) {
      throw InvalidArgument(std::string(who) + ": sample " + std::to_string(i) +
                            " has non-finite features");
    }
  }
  return f;
}

}  // namespace sitsrnn
