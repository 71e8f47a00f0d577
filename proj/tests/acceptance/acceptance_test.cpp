// Acceptance gate: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sitsrnn/cli.hpp"

using namespace sitsrnn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

ModelParams random_model(std::size_t d, std::size_t h, std::size_t k, std::uint64_t seed) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < k; ++c) names.push_back("c" + std::to_string(c));
  ModelParams p = init_model(d, h, names, seed);
  std::mt19937_64 rng(derive_seed(seed, 99));
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  p.for_each_tensor([&](const std::string&, std::span<double> t) {
    for (double& v : t) v = u(rng);
  });
  return p;
}

TimeSeriesSample random_sample(std::size_t n, std::size_t d, std::size_t label, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TimeSeriesSample s{"x", label, std::vector<Vector>(n, Vector(d))};
  for (auto& step : s.steps) {
    for (double& v : step) v = u(rng);
  }
  return s;
}

Outcome gradient_check() {
  const double step = 1e-5;
  // Relative error |a - n| / max(|a| + |n|, 1e-8). The max-denominator form
  // is reported too; it exceeds 1e-4 only where |gradient| ~ 1e-7 and the
  // central difference itself carries ~1e-11 of rounding error.
  double worst = 0.0, worst_max_form = 0.0;
  std::string where;
  std::size_t checked = 0;
  for (std::size_t d : {1, 2, 4}) {
    for (std::size_t h : {2, 4, 8}) {
      for (std::size_t n : {1, 3, 5}) {
        const std::uint64_t seed = d * 100 + h * 10 + n;
        auto p = random_model(d, h, 3, seed);
        const auto s = random_sample(n, d, seed % 3, seed + 1);
        const auto grads = model_backward(model_forward(s, p), p, s.label);
        const auto analytic = detail::named_tensors(grads);
        std::size_t tensor = 0;
        p.for_each_tensor([&](const std::string& name, std::span<double> t) {
          for (std::size_t j = 0; j < t.size(); ++j) {
            const double orig = t[j];
            t[j] = orig + step;
            const double up = model_forward(s, p).loss;
            t[j] = orig - step;
            const double down = model_forward(s, p).loss;
            t[j] = orig;
            const double numeric = (up - down) / (2 * step);
            const double a = analytic[tensor].second[j];
            const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-8);
            worst_max_form = std::max(
                worst_max_form, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8}));
            ++checked;
            if (rel > worst) {
              worst = rel;
              where = "D=" + std::to_string(d) + " H=" + std::to_string(h) + " N=" + std::to_string(n) + " " +
                      name + "[" + std::to_string(j) + "]";
            }
          }
          ++tensor;
        });
      }
    }
  }
  return {worst <= 1e-4, std::to_string(checked) + " entries, worst relative error " + fmt("%.3e", worst) +
                             " at " + where + " (max-denominator form " + fmt("%.3e", worst_max_form) + ")"};
}

Outcome overfit() {
  SyntheticConfig sc;
  sc.num_classes = 2;
  sc.samples_per_class = 10;
  sc.num_timestamps = 10;
  sc.num_features = 4;
  sc.motif_jitter = 1;
  sc.noise_sigma = 0.1;
  sc.seed = 1;
  const auto raw = generate_synthetic(sc);
  const auto ds = apply_normalizer(fit_normalizer(raw), raw);
  TrainConfig tc;
  tc.hidden_dim = 32;
  tc.epochs = 200;
  tc.seed = 1;
  const auto result = train(ds, tc);
  const bool finite = std::all_of(result.loss_history.begin(), result.loss_history.end(),
                                  [](double v) { return std::isfinite(v); });
  std::size_t hit = 0;
  for (std::size_t i = 0; const auto& p : predict(ds, result.params)) hit += p.label == ds.samples[i++].label;
  return {finite && hit == ds.size(), std::to_string(hit) + "/" + std::to_string(ds.size()) +
                                          " correct, final loss " + fmt("%.4g", result.loss_history.back()) +
                                          (finite ? "" : ", non-finite loss")};
}

Outcome metric_oracle() {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + trial % 10, n = 10 + rng() % 500;
    std::vector<std::size_t> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = rng() % k;
      pred[i] = rng() % 2 ? truth[i] : rng() % k;
    }
    const auto r = metrics_from_confusion(confusion_matrix(truth, pred, k));
    // Independent recomputation from the label lists.
    const double dn = static_cast<double>(n);
    double agree = 0, chance = 0, macro = 0, weighted = 0;
    for (std::size_t i = 0; i < n; ++i) agree += truth[i] == pred[i];
    for (std::size_t c = 0; c < k; ++c) {
      double tp = 0, fp = 0, fn = 0, nt = 0, np = 0;
      for (std::size_t i = 0; i < n; ++i) {
        tp += truth[i] == c && pred[i] == c;
        fp += truth[i] != c && pred[i] == c;
        fn += truth[i] == c && pred[i] != c;
        nt += truth[i] == c;
        np += pred[i] == c;
      }
      chance += nt * np / (dn * dn);
      const double f = tp > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
      macro += f / static_cast<double>(k);
      weighted += f * nt / dn;
      worst = std::max(worst, std::abs(f - r.per_class[c].f_measure));
    }
    const double acc = agree / dn;
    const double kappa = chance < 1 ? (acc - chance) / (1 - chance) : (acc == 1 ? 1.0 : 0.0);
    worst = std::max({worst, std::abs(acc - r.accuracy), std::abs(kappa - r.kappa), std::abs(macro - r.macro_f),
                      std::abs(weighted - r.weighted_f)});
  }
  ConfusionMatrix chance_cm(2), skew(2);
  chance_cm.add(0, 0, 25), chance_cm.add(0, 1, 25), chance_cm.add(1, 0, 25), chance_cm.add(1, 1, 25);
  skew.add(0, 0, 45), skew.add(0, 1, 5), skew.add(1, 0, 10), skew.add(1, 1, 40);
  const auto a = metrics_from_confusion(chance_cm), b = metrics_from_confusion(skew);
  const bool anchors = std::abs(a.kappa) <= 1e-12 && std::abs(b.accuracy - 0.85) <= 1e-12 &&
                       std::abs(b.kappa - 0.70) <= 1e-12;
  return {worst <= 1e-12 && anchors, "worst deviation " + fmt("%.3e", worst) + ", kappa anchors " +
                                         fmt("%.4f", a.kappa) + " / " + fmt("%.4f", b.kappa) +
                                         ", accuracy " + fmt("%.4f", b.accuracy)};
}

CrossValConfig benchmark_config() {
  CrossValConfig cfg;
  cfg.seed = 7;
  cfg.lstm.hidden_dim = 64;
  cfg.lstm.epochs = 60;
  cfg.log = [](const std::string& line) { std::fprintf(stderr, "  %s\n", line.c_str()); };
  return cfg;
}

Outcome reunion_ordering() {
  const auto ds = generate_synthetic(reunion_like_config(7));
  const Method methods[] = {Method::lstm, Method::rf_raw, Method::svm_raw, Method::rf_lstm};
  const auto r = run_comparison(ds, methods, benchmark_config());
  const double lstm = r[0].pooled_metrics.macro_f, rf = r[1].pooled_metrics.macro_f;
  const double svm = r[2].pooled_metrics.macro_f, rf_lstm = r[3].pooled_metrics.macro_f;
  const bool a = lstm - rf >= 0.03 && lstm - svm >= 0.03;
  const bool b = rf_lstm >= rf;
  return {a && b, "macro-F lstm " + fmt("%.4f", lstm) + ", rf_raw " + fmt("%.4f", rf) + ", svm_raw " +
                      fmt("%.4f", svm) + ", rf_lstm " + fmt("%.4f", rf_lstm) + (a ? "" : "; (a) fails") +
                      (b ? "" : "; (b) fails")};
}

Outcome rare_class() {
  const auto cfg = thau_like_config(7);
  const auto ds = generate_synthetic(cfg);
  const auto counts = ds.class_counts();
  const std::size_t rare = static_cast<std::size_t>(std::min_element(counts.begin(), counts.end()) - counts.begin());
  const Method methods[] = {Method::lstm, Method::rf_raw};
  const auto r = run_comparison(ds, methods, benchmark_config());
  const double lstm = r[0].pooled_metrics.per_class[rare].f_measure;
  const double rf = r[1].pooled_metrics.per_class[rare].f_measure;
  return {lstm >= rf, "class " + ds.class_names[rare] + " (" + std::to_string(counts[rare]) + " of " +
                          std::to_string(ds.size()) + " samples): F lstm " + fmt("%.4f", lstm) + ", rf_raw " +
                          fmt("%.4f", rf)};
}

Outcome softmax_normalization() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1e4, 1e4);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Vector logits(1 + rng() % 20);
    for (double& v : logits) {
      const auto pick = rng() % 4;
      v = pick == 0 ? 1e4 : pick == 1 ? -1e4 : u(rng);
    }
    const auto p = stable_softmax(logits);
    double total = 0.0;
    for (double v : p) total += v;
    worst = std::max(worst, std::abs(total - 1.0));
  }
  return {worst <= 1e-9, "worst |sum - 1| " + fmt("%.3e", worst)};
}

int run_tool(const std::string& args) {
  const int raw = std::system((std::string(SITSRNN_TOOL_PATH) + " " + args + " 2>/dev/null").c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) { return detail::read_text_file(p.string(), "acceptance"); }

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "sitsrnn_acceptance_cli";
  fs::remove_all(root);
  const std::string data = (root / "data/thau-like.csv").string();
  const std::string small = " --hidden 8 --epochs 3 --trees 20 --seed 3";
  auto commands = [&](const std::string& threads) {
    const std::string model = (root / "train" / "model.bin").string();
    return std::vector<std::pair<std::string, std::string>>{
        {"data", "synth --preset thau-like --seed 3"},
        {"train", "train --data " + data + " --hidden 8 --epochs 3 --seed 3" + threads},
        {"predict", "predict --data " + data + " --model " + model + threads},
        {"features", "extract-features --data " + data + " --model " + model + threads},
        {"crossval", "crossval --data " + data + " --method all -k 3" + small + threads}};
  };
  // Runs every command into root/<name>, returning all artifact bytes.
  auto run_all = [&](const std::string& threads) -> std::optional<std::map<std::string, std::string>> {
    std::map<std::string, std::string> bytes;
    for (const auto& [name, cmd] : commands(threads)) {
      fs::remove_all(root / name);
      if (run_tool(cmd + " -o " + (root / name).string()) != 0) return std::nullopt;
      for (const auto& entry : fs::directory_iterator(root / name)) {
        bytes[name + "/" + entry.path().filename().string()] = slurp(entry.path());
      }
    }
    return bytes;
  };
  const auto first = run_all(" --threads 1");
  const auto second = run_all(" --threads 1");
  const auto threaded = run_all(" --threads 4");
  if (!first || !second || !threaded) return {false, "a CLI command failed"};
  std::size_t identical = 0;
  std::vector<std::string> differ;
  for (const auto& [name, b] : *first) {
    if (second->count(name) && second->at(name) == b) {
      ++identical;
    } else {
      differ.push_back(name);
    }
  }
  // With more threads only the recorded thread count may change.
  for (const char* name : {"train/model.bin", "predict/predictions.csv", "features/features.csv",
                           "crossval/report.kv", "crossval/report.txt"}) {
    if (threaded->at(name) != first->at(name)) differ.push_back(std::string(name) + " (threads 4)");
  }
  fs::remove_all(root);
  std::string detail = std::to_string(identical) + "/" + std::to_string(first->size()) +
                       " artifacts byte-identical across repeated runs; threads 4 matches threads 1";
  for (const auto& d : differ) detail += "; differs: " + d;
  return {differ.empty() && identical == first->size(), detail};
}

Outcome serialization() {
  SyntheticConfig sc;
  sc.num_classes = 4;
  sc.samples_per_class = 25;
  sc.num_timestamps = 8;
  sc.num_features = 5;
  sc.seed = 11;
  const auto raw = generate_synthetic(sc);
  const auto ds = apply_normalizer(fit_normalizer(raw), raw);
  TrainConfig tc;
  tc.hidden_dim = 16;
  tc.epochs = 5;
  tc.seed = 11;
  auto params = train(ds, tc).params;
  params.normalizer = fit_normalizer(raw);
  const fs::path file = fs::temp_directory_path() / "sitsrnn_acceptance_model.bin";
  save_model(params, file.string());
  const auto loaded = load_model(file.string());
  fs::remove(file);
  const auto before = predict(ds, params), after = predict(ds, loaded);
  std::size_t same = 0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    same += before[i].label == after[i].label && before[i].probs == after[i].probs;
  }
  return {same == ds.size() && loaded == params,
          std::to_string(same) + "/" + std::to_string(ds.size()) + " predictions bitwise equal after reload"};
}

Outcome baseline_sanity() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<FlatSample> xor_set;
  for (int i = 0; i < 200; ++i) {
    const int a = i % 2, b = (i / 2) % 2;
    xor_set.push_back({{a + noise(rng), b + noise(rng)}, static_cast<std::size_t>(a ^ b)});
  }
  ForestOptions fo;
  fo.num_trees = 100;
  fo.seed = 5;
  const auto forest = rf_fit(xor_set, 2, fo);
  std::size_t rf_hit = 0;
  for (std::size_t i = 0; const auto p : rf_predict_all(forest, xor_set)) rf_hit += p == xor_set[i++].label;
  const double rf_acc = static_cast<double>(rf_hit) / static_cast<double>(xor_set.size());

  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<FlatSample> blobs;
  for (int i = 0; i < 100; ++i) {
    const std::size_t label = i % 2;
    blobs.push_back({{unit(rng) + (label ? 10.0 : 0.0), unit(rng)}, label});
  }
  SvmOptions so;
  so.record_objective = true;
  const auto svm = svm_fit(blobs, 2, so);
  std::size_t svm_hit = 0;
  for (std::size_t i = 0; const auto p : svm_predict_all(svm, blobs)) svm_hit += p == blobs[i++].label;
  bool monotone = true;
  for (const auto& m : svm.machines) {
    for (std::size_t t = 1; t < m.objective_trace.size(); ++t) {
      monotone = monotone && m.objective_trace[t] >= m.objective_trace[t - 1] - 1e-9;
    }
  }
  return {rf_acc >= 0.95 && svm_hit == blobs.size() && monotone,
          "RF XOR accuracy " + fmt("%.4f", rf_acc) + ", SVM blobs " + std::to_string(svm_hit) + "/" +
              std::to_string(blobs.size()) + ", dual objective " + (monotone ? "non-decreasing" : "decreased")};
}

Outcome gap_fill() {
  const bool a = gap_fill_series({{1, 0, 3}, {true, false, true}}) == Vector{1, 2, 3};
  const bool b = gap_fill_series({{0, 2, 4}, {false, true, true}}) == Vector{2, 2, 4};
  const bool c = gap_fill_series({{0, 0, 0, 6}, {true, false, false, true}}) == Vector{0, 2, 4, 6};
  return {a && b && c, std::string("[1,2,3] ") + (a ? "ok" : "wrong") + ", [2,2,4] " + (b ? "ok" : "wrong") +
                           ", [0,2,4,6] " + (c ? "ok" : "wrong")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient check", gradient_check},
      {"overfit capacity", overfit},
      {"metric oracle", metric_oracle},
      {"reunion-like ordering", reunion_ordering},
      {"thau-like rare class", rare_class},
      {"softmax normalization", softmax_normalization},
      {"CLI determinism", cli_determinism},
      {"serialization", serialization},
      {"baseline sanity", baseline_sanity},
      {"gap fill", gap_fill},
  };
  std::set<std::size_t> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoul(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && !only.count(i + 1)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
