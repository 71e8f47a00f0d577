#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sitsrnn/data.hpp"
#include "sitsrnn/flat.hpp"
#include "sitsrnn/forest.hpp"
#include "sitsrnn/metrics.hpp"
#include "sitsrnn/model.hpp"
#include "sitsrnn/svm.hpp"

namespace sitsrnn {

enum class Method { lstm, rf_raw, svm_raw, rf_lstm, svm_lstm };

inline constexpr Method kAllMethods[] = {Method::lstm, Method::rf_raw, Method::svm_raw,
                                         Method::rf_lstm, Method::svm_lstm};

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::lstm: return "lstm";
    case Method::rf_raw: return "rf_raw";
    case Method::svm_raw: return "svm_raw";
    case Method::rf_lstm: return "rf_lstm";
    case Method::svm_lstm: return "svm_lstm";
  }
  return "unknown";
}

inline std::optional<Method> parse_method(std::string_view name) {
  for (auto m : kAllMethods) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

inline bool uses_lstm(Method m) {
  return m == Method::lstm || m == Method::rf_lstm || m == Method::svm_lstm;
}

// Everything trained on one fold's training split.
struct FoldArtifacts {
  Normalizer normalizer;
  std::optional<ModelParams> lstm;  // carries the normalizer too
  std::optional<ForestModel> forest;
  std::optional<SvmModel> svm;
};

struct CrossValConfig {
  // lstm.seed, forest.seed and svm.seed are ignored: per-fold seeds derive
  // from `seed`.
  TrainConfig lstm;
  ForestOptions forest;
  SvmOptions svm;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  // Explicit fold assignment; when empty, stratified folds derive from `seed`.
  std::optional<FoldAssignment> fold_assignment;
  // Progress lines ("fold 2/5 lstm done").
  std::function<void(const std::string&)> log;
  // Called once per fold and method after training, before evaluation.
  std::function<void(std::size_t fold, Method, const FoldArtifacts&)> on_fold_trained;
};

struct FoldResult {
  std::size_t fold = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  ConfusionMatrix confusion;
  MetricsReport metrics;
};

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over folds
};

struct CrossValReport {
  Method method = Method::lstm;
  std::vector<std::string> class_names;
  std::vector<FoldResult> folds;
  ConfusionMatrix pooled;
  MetricsReport pooled_metrics;
  MeanStd accuracy, kappa, macro_f, weighted_f;
};

namespace detail {

inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return out;
}

inline void finish_report(CrossValReport& r) {
  r.pooled_metrics = metrics_from_confusion(r.pooled);
  std::vector<double> acc, kap, mf, wf;
  for (const auto& f : r.folds) {
    acc.push_back(f.metrics.accuracy);
    kap.push_back(f.metrics.kappa);
    mf.push_back(f.metrics.macro_f);
    wf.push_back(f.metrics.weighted_f);
  }
  r.accuracy = mean_std(acc);
  r.kappa = mean_std(kap);
  r.macro_f = mean_std(mf);
  r.weighted_f = mean_std(wf);
}

inline std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold, std::uint64_t stream) {
  return derive_seed(derive_seed(seed, 1000 + fold), stream);
}

inline void check_partition(const FoldAssignment& folds, std::size_t n) {
  if (folds.size() < 2) throw InvalidArgument("eval: explicit fold assignment needs >= 2 folds");
  std::vector<bool> seen(n, false);
  std::size_t count = 0;
  for (const auto& fold : folds.folds) {
    if (fold.empty()) throw InvalidArgument("eval: explicit fold assignment has an empty fold");
    for (auto i : fold) {
      if (i >= n || seen[i]) throw InvalidArgument("eval: explicit fold assignment is not a partition");
      seen[i] = true;
      ++count;
    }
  }
  if (count != n) throw InvalidArgument("eval: explicit fold assignment is not a partition");
}

}  // namespace detail

// Runs every requested method on the same stratified folds. Per fold the
// normalizer is fit on the training split only; methods that need the LSTM
// share one network trained on that split, so the results equal separate
// single-method runs with the same seed.
inline std::vector<CrossValReport> run_comparison(const Dataset& ds, std::span<const Method> methods,
                                                  const CrossValConfig& cfg) {
  ds.validate();
  ds.require_trainable("eval");
  if (methods.empty()) throw InvalidArgument("eval: no methods requested");
  const std::size_t k = ds.num_classes();
  const auto labels = ds.labels();
  const auto folds =
      cfg.fold_assignment ? *cfg.fold_assignment : stratified_kfold(labels, cfg.folds, cfg.seed);
  if (cfg.fold_assignment) detail::check_partition(folds, ds.size());

  std::vector<CrossValReport> reports(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    reports[m].method = methods[m];
    reports[m].class_names = ds.class_names;
    reports[m].pooled = ConfusionMatrix(k);
  }
  bool need_lstm = false;
  for (auto m : methods) need_lstm = need_lstm || uses_lstm(m);

  for (std::size_t f = 0; f < folds.size(); ++f) {
    try {
      const auto train_idx = folds.train_indices(f);
      const Dataset train_raw = ds.subset(train_idx);
      const Dataset test_raw = ds.subset(folds.folds[f]);
      const Normalizer norm = fit_normalizer(train_raw);
      const Dataset train_set = apply_normalizer(norm, train_raw);
      const Dataset test = apply_normalizer(norm, test_raw);
      const auto truth = test.labels();

      std::optional<ModelParams> network;
      std::vector<FlatSample> train_features, test_features;
      if (need_lstm) {
        TrainConfig tc = cfg.lstm;
        tc.seed = detail::fold_seed(cfg.seed, f, 1);
        tc.threads = cfg.threads;
        network = train(train_set, tc).params;
        network->normalizer = norm;
        train_features = flatten(extract_features(train_set, *network, cfg.threads));
        test_features = flatten(extract_features(test, *network, cfg.threads));
      }
      std::vector<FlatSample> train_flat, test_flat;
      for (auto m : methods) {
        if (m == Method::rf_raw || m == Method::svm_raw) {
          train_flat = flatten(train_set);
          test_flat = flatten(test);
          break;
        }
      }

      for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        const Method method = methods[mi];
        FoldArtifacts artifacts{norm, std::nullopt, std::nullopt, std::nullopt};
        std::vector<std::size_t> predicted;
        const bool on_lstm = method == Method::rf_lstm || method == Method::svm_lstm;
        const auto& fit_set = on_lstm ? train_features : train_flat;
        const auto& eval_set = on_lstm ? test_features : test_flat;
        if (uses_lstm(method)) artifacts.lstm = network;
        switch (method) {
          case Method::lstm: {
            for (const auto& p : predict(test, *network, cfg.threads)) predicted.push_back(p.label);
            break;
          }
          case Method::rf_raw:
          case Method::rf_lstm: {
            ForestOptions fo = cfg.forest;
            fo.seed = detail::fold_seed(cfg.seed, f, 2);
            fo.threads = cfg.threads;
            artifacts.forest = rf_fit(fit_set, k, fo);
            predicted = rf_predict_all(*artifacts.forest, eval_set, cfg.threads);
            break;
          }
          case Method::svm_raw:
          case Method::svm_lstm: {
            SvmOptions so = cfg.svm;
            so.seed = detail::fold_seed(cfg.seed, f, 3);
            so.threads = cfg.threads;
            artifacts.svm = svm_fit(fit_set, k, so);
            predicted = svm_predict_all(*artifacts.svm, eval_set, cfg.threads);
            break;
          }
        }
        if (cfg.on_fold_trained) cfg.on_fold_trained(f, method, artifacts);
        FoldResult fr;
        fr.fold = f;
        fr.train_size = train_set.size();
        fr.test_size = test.size();
        fr.confusion = confusion_matrix(truth, predicted, k);
        fr.metrics = metrics_from_confusion(fr.confusion);
        reports[mi].pooled += fr.confusion;
        reports[mi].folds.push_back(std::move(fr));
        if (cfg.log) {
          cfg.log("fold " + std::to_string(f + 1) + "/" + std::to_string(folds.size()) + " " +
                  std::string(method_name(method)) + " accuracy " +
                  detail::format_double(reports[mi].folds.back().metrics.accuracy));
        }
      }
    } catch (const Error& e) {
      throw Error("eval: fold " + std::to_string(f) + " failed: " + e.what());
    }
  }
  for (auto& r : reports) detail::finish_report(r);
  return reports;
}

inline CrossValReport run_cross_validation(const Dataset& ds, Method method,
                                           const CrossValConfig& cfg) {
  const Method one[] = {method};
  return std::move(run_comparison(ds, one, cfg).front());
}

}  // namespace sitsrnn
