#pragma once

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sitsrnn/checksum.hpp"
#include "sitsrnn/crossval.hpp"
#include "sitsrnn/data.hpp"
#include "sitsrnn/model.hpp"
#include "sitsrnn/report.hpp"

namespace sitsrnn {

inline constexpr std::string_view kToolVersion = "1.0.0";

enum class Command { synth, train, predict, extract_features, crossval };

inline std::string_view command_name(Command c) {
  switch (c) {
    case Command::synth: return "synth";
    case Command::train: return "train";
    case Command::predict: return "predict";
    case Command::extract_features: return "extract-features";
    case Command::crossval: return "crossval";
  }
  return "unknown";
}

// Fully resolved command line. Every hyperparameter holds its default unless
// overridden by a flag.
struct RunSpec {
  Command command = Command::crossval;
  std::string data_path;
  std::string manifest_path;  // defaults to data_path with a .manifest extension
  std::string model_path;
  std::string output_dir;
  std::string preset;  // synth only
  std::vector<Method> methods;
  TrainConfig train;
  ForestOptions forest;
  SvmOptions svm;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct UsageError : Error {
  using Error::Error;
};

// Thrown by parse_run_spec for --help; carries the help text.
struct HelpRequested : std::exception {
  explicit HelpRequested(std::string text) : text(std::move(text)) {}
  const char* what() const noexcept override { return text.c_str(); }
  std::string text;
};

namespace detail {

inline std::string default_manifest_path(const std::string& data_path) {
  std::filesystem::path p(data_path);
  p.replace_extension(".manifest");
  return p.string();
}

inline std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  auto add = [&](Method m) {
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  };
  for (const auto& raw : names) {
    for (auto piece : split(raw, ',')) {
      const std::string name = trim(piece);
      if (name == "all") {
        for (auto m : kAllMethods) add(m);
      } else if (auto m = parse_method(name)) {
        add(*m);
      } else {
        throw UsageError("cli: unknown method '" + name +
                         "' (expected lstm, rf_raw, svm_raw, rf_lstm, svm_lstm or all)");
      }
    }
  }
  return out;
}

inline void add_common(CLI::App& cmd, RunSpec& s) {
  cmd.add_option("--seed", s.seed, "Seed for every random choice in the run")
      ->capture_default_str();
  cmd.add_option("--threads", s.threads,
                 "Worker threads; 1 is the serial reference mode, results do not depend on it")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("-o,--output", s.output_dir, "Output directory (created if missing)")->required();
}

inline void add_data(CLI::App& cmd, RunSpec& s) {
  cmd.add_option("--data", s.data_path, "Data CSV: id,label,then T*D values timestep-major")
      ->required()
      ->check(CLI::ExistingFile);
  cmd.add_option("--manifest", s.manifest_path,
                 "Dataset manifest (default: the data path with a .manifest extension)")
      ->check(CLI::ExistingFile);
}

inline void add_lstm_options(CLI::App& cmd, RunSpec& s) {
  auto& t = s.train;
  cmd.add_option("--hidden", t.hidden_dim, "LSTM hidden units")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--lr", t.learning_rate, "RMSprop base learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--lr-decay", t.lr_decay, "Learning-rate decay: lr / (1 + decay * count)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd.add_option_function<std::string>(
         "--decay-schedule",
         [&t](const std::string& v) {
           t.decay_schedule = v == "per-epoch" ? DecaySchedule::per_epoch : DecaySchedule::per_update;
         },
         "What `count` counts in the decay: per-update or per-epoch")
      ->check(CLI::IsMember({"per-update", "per-epoch"}))
      ->default_str("per-update");
  cmd.add_option("--epochs", t.epochs, "Training epochs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--batch", t.batch_size, "Mini-batch size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--rho", t.rmsprop_rho, "RMSprop squared-gradient decay")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd.add_option("--epsilon", t.rmsprop_epsilon, "RMSprop denominator epsilon")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--clip-norm", t.grad_clip_norm, "Clip the global gradient norm (off by default)")
      ->check(CLI::PositiveNumber);
}

inline void add_baseline_options(CLI::App& cmd, RunSpec& s) {
  cmd.add_option("--trees", s.forest.num_trees, "Random forest: number of trees")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--depth", s.forest.max_depth, "Random forest: maximum depth")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--svm-c", s.svm.c, "SVM: box constraint C")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--svm-gamma", s.svm.gamma, "SVM: RBF kernel width, exp(-gamma*|u-v|^2)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_option("--svm-tol", s.svm.tol, "SVM: SMO stopping tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

// Echo of everything that determines a model or report. Thread count is left
// out: it never changes results.
inline ConfigEcho echo_train(const TrainConfig& t) {
  return {{"hidden", std::to_string(t.hidden_dim)},
          {"lr", format_double(t.learning_rate)},
          {"lr_decay", format_double(t.lr_decay)},
          {"decay_schedule", t.decay_schedule == DecaySchedule::per_update ? "per-update" : "per-epoch"},
          {"epochs", std::to_string(t.epochs)},
          {"batch", std::to_string(t.batch_size)},
          {"rho", format_double(t.rmsprop_rho)},
          {"epsilon", format_double(t.rmsprop_epsilon)},
          {"clip_norm", t.grad_clip_norm ? format_double(*t.grad_clip_norm) : "off"}};
}

inline ConfigEcho echo_baselines(const RunSpec& s) {
  return {{"trees", std::to_string(s.forest.num_trees)},
          {"depth", std::to_string(s.forest.max_depth)},
          {"svm_c", format_double(s.svm.c)},
          {"svm_gamma", format_double(s.svm.gamma)},
          {"svm_tol", format_double(s.svm.tol)}};
}

// Flags that reproduce `s` exactly.
inline std::string replay_command(const RunSpec& s) {
  std::ostringstream out;
  out << "sitsrnn " << command_name(s.command);
  if (s.command == Command::synth) out << " --preset " << s.preset;
  if (!s.data_path.empty()) out << " --data " << s.data_path << " --manifest " << s.manifest_path;
  if (!s.model_path.empty()) out << " --model " << s.model_path;
  if (s.command == Command::train || s.command == Command::crossval) {
    for (const auto& [k, v] : echo_train(s.train)) {
      if (k == "clip_norm" && v == "off") continue;
      std::string flag = k == "clip_norm" ? "clip-norm" : k == "lr_decay" ? "lr-decay"
                       : k == "decay_schedule"                           ? "decay-schedule"
                                                                         : k;
      out << " --" << flag << " " << v;
    }
  }
  if (s.command == Command::crossval) {
    for (const auto& [k, v] : echo_baselines(s)) {
      std::string flag = k;
      std::replace(flag.begin(), flag.end(), '_', '-');
      out << " --" << flag << " " << v;
    }
    out << " --folds " << s.folds << " --method ";
    for (std::size_t i = 0; i < s.methods.size(); ++i) out << (i ? "," : "") << method_name(s.methods[i]);
  }
  out << " --seed " << s.seed << " --threads " << s.threads << " -o " << s.output_dir;
  return out.str();
}

}  // namespace detail

// `args` excludes the program name. Throws UsageError for anything the
// caller should answer with exit code 2, HelpRequested for --help.
inline RunSpec parse_run_spec(const std::vector<std::string>& args) {
  RunSpec s;
  CLI::App app{"Time-series classification with an LSTM and flattened-feature baselines", "sitsrnn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset (CSV + manifest)");
  synth->add_option("--preset", s.preset, "thau-like (11 classes, T=3, imbalanced) or reunion-like (9 classes, T=23)")
      ->required()
      ->check(CLI::IsMember({"thau-like", "reunion-like"}));
  detail::add_common(*synth, s);

  auto* train_cmd = app.add_subcommand("train", "Train the LSTM classifier; writes model.bin");
  detail::add_data(*train_cmd, s);
  detail::add_lstm_options(*train_cmd, s);
  detail::add_common(*train_cmd, s);

  auto* predict_cmd = app.add_subcommand("predict", "Classify a dataset; writes predictions.csv");
  detail::add_data(*predict_cmd, s);
  predict_cmd->add_option("--model", s.model_path, "Model file written by train")
      ->required()
      ->check(CLI::ExistingFile);
  detail::add_common(*predict_cmd, s);

  auto* extract_cmd = app.add_subcommand(
      "extract-features", "Write the final LSTM hidden state of every sample as a T=1 dataset");
  detail::add_data(*extract_cmd, s);
  extract_cmd->add_option("--model", s.model_path, "Model file written by train")
      ->required()
      ->check(CLI::ExistingFile);
  detail::add_common(*extract_cmd, s);

  std::vector<std::string> method_names;
  auto* cv = app.add_subcommand("crossval", "Stratified k-fold comparison; writes report.txt and report.kv");
  detail::add_data(*cv, s);
  cv->add_option("--method", method_names,
                 "lstm, rf_raw, svm_raw, rf_lstm, svm_lstm or all; comma-separated or repeated")
      ->required()
      ->delimiter(',');
  cv->add_option("--folds,-k", s.folds, "Number of folds")->check(CLI::Range(2, 1000000))->capture_default_str();
  detail::add_lstm_options(*cv, s);
  detail::add_baseline_options(*cv, s);
  detail::add_common(*cv, s);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    std::string text = app.help();
    for (auto* sub : app.get_subcommands()) text = sub->help();
    throw HelpRequested(text);
  } catch (const CLI::CallForVersion&) {
    throw HelpRequested(std::string(kToolVersion) + "\n");
  } catch (const CLI::ParseError& e) {
    std::string usage = app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help();
    throw UsageError("cli: " + std::string(e.what()) + "\n\n" + usage);
  }

  if (*synth) s.command = Command::synth;
  if (*train_cmd) s.command = Command::train;
  if (*predict_cmd) s.command = Command::predict;
  if (*extract_cmd) s.command = Command::extract_features;
  if (*cv) {
    s.command = Command::crossval;
    s.methods = detail::parse_methods(method_names);
  }
  if (!s.data_path.empty() && s.manifest_path.empty()) {
    s.manifest_path = detail::default_manifest_path(s.data_path);
    if (!std::filesystem::exists(s.manifest_path)) {
      throw UsageError("cli: no --manifest given and '" + s.manifest_path + "' does not exist");
    }
  }
  try {
    s.train.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("cli: ") + e.what());
  }
  s.train.seed = s.seed;
  s.train.threads = s.threads;
  s.forest.threads = s.threads;
  s.svm.threads = s.threads;
  return s;
}

namespace detail {

class RunManifest {
 public:
  explicit RunManifest(const RunSpec& s) {
    add("run_manifest_version", "1");
    add("tool_version", std::string(kToolVersion));
    add("command", std::string(command_name(s.command)));
    add("replay", replay_command(s));
    add("seed", std::to_string(s.seed));
    add("threads", std::to_string(s.threads));
  }
  void add(const std::string& key, const std::string& value) { lines_ += key + "=" + value + "\n"; }
  void add_config(const ConfigEcho& echo) {
    for (const auto& [k, v] : echo) add("config." + k, v);
  }
  void add_input(const std::string& role, const std::string& path) {
    add("input." + role, path);
    add("input." + role + ".sha256", sha256_file(path));
  }
  // Writes the artifact, then records its checksum.
  void write_output(const std::string& dir, const std::string& name, std::string_view bytes) {
    write_text_file((std::filesystem::path(dir) / name).string(), bytes);
    add("output." + name + ".sha256", sha256_hex(bytes));
  }
  void save(const std::string& dir) const {
    write_text_file((std::filesystem::path(dir) / "run.manifest").string(), lines_);
  }

 private:
  std::string lines_;
};

inline Dataset load_spec_dataset(const RunSpec& s, RunManifest& rm) {
  rm.add_input("data", s.data_path);
  rm.add_input("manifest", s.manifest_path);
  return load_dataset(s.data_path, s.manifest_path);
}

inline ModelParams load_spec_model(const RunSpec& s, RunManifest& rm, const Dataset& ds) {
  rm.add_input("model", s.model_path);
  ModelParams p = load_model(s.model_path);
  if (ds.num_features != p.lstm.input_dim) {
    throw ShapeError("cli: model expects D=" + std::to_string(p.lstm.input_dim) +
                     " features per timestep, dataset has D=" + std::to_string(ds.num_features));
  }
  return p;
}

inline Dataset normalized_for(const ModelParams& p, const Dataset& ds) {
  return p.normalizer ? apply_normalizer(*p.normalizer, ds) : ds;
}

}  // namespace detail

// Runs one command. Progress goes to `log`; results only to files under
// spec.output_dir. Throws on failure.
inline void execute(const RunSpec& s, std::ostream& log) {
  std::filesystem::create_directories(s.output_dir);
  detail::RunManifest rm(s);

  switch (s.command) {
    case Command::synth: {
      const auto cfg = s.preset == "thau-like" ? thau_like_config(s.seed) : reunion_like_config(s.seed);
      const Dataset ds = generate_synthetic(cfg);
      rm.add("config.preset", s.preset);
      rm.add("config.generator", cfg.describe());
      rm.write_output(s.output_dir, s.preset + ".csv", format_dataset_csv(ds));
      rm.write_output(s.output_dir, s.preset + ".manifest", format_manifest(manifest_of(ds)));
      log << "synth: " << ds.size() << " samples, " << ds.num_classes() << " classes, T="
          << ds.num_timestamps << ", D=" << ds.num_features << "\n";
      break;
    }
    case Command::train: {
      const Dataset raw = detail::load_spec_dataset(s, rm);
      rm.add_config(detail::echo_train(s.train));
      const Normalizer norm = fit_normalizer(raw);
      const Dataset ds = apply_normalizer(norm, raw);
      auto result = train(ds, s.train, [&](std::size_t epoch, double loss) {
        log << "train: epoch " << epoch + 1 << "/" << s.train.epochs << " loss "
            << detail::format_double(loss) << "\n";
      });
      result.params.normalizer = norm;
      std::string history = "epoch,loss\n";
      for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
        history += std::to_string(e + 1) + "," + detail::format_double(result.loss_history[e]) + "\n";
      }
      rm.write_output(s.output_dir, "model.bin", serialize_model(result.params));
      rm.write_output(s.output_dir, "history.csv", history);
      break;
    }
    case Command::predict: {
      const Dataset raw = detail::load_spec_dataset(s, rm);
      const ModelParams p = detail::load_spec_model(s, rm, raw);
      const Dataset ds = detail::normalized_for(p, raw);
      const auto preds = predict(ds, p, s.threads);
      std::string csv = "id,label,predicted";
      for (const auto& c : p.class_names) csv += ",p_" + c;
      csv += "\n";
      for (std::size_t i = 0; i < preds.size(); ++i) {
        csv += ds.samples[i].id + "," + ds.class_names[ds.samples[i].label] + "," +
               p.class_names[preds[i].label];
        for (double v : preds[i].probs) csv += "," + detail::format_double(v);
        csv += "\n";
      }
      rm.write_output(s.output_dir, "predictions.csv", csv);
      log << "predict: " << preds.size() << " samples\n";
      break;
    }
    case Command::extract_features: {
      const Dataset raw = detail::load_spec_dataset(s, rm);
      const ModelParams p = detail::load_spec_model(s, rm, raw);
      const Dataset ds = detail::normalized_for(p, raw);
      Dataset table = extract_features(ds, p, s.threads).to_dataset();
      rm.write_output(s.output_dir, "features.csv", format_dataset_csv(table));
      rm.write_output(s.output_dir, "features.manifest", format_manifest(manifest_of(table)));
      log << "extract-features: " << table.size() << " samples, " << table.num_features
          << " features\n";
      break;
    }
    case Command::crossval: {
      const Dataset ds = detail::load_spec_dataset(s, rm);
      CrossValConfig cfg;
      cfg.lstm = s.train;
      cfg.forest = s.forest;
      cfg.svm = s.svm;
      cfg.folds = s.folds;
      cfg.seed = s.seed;
      cfg.threads = s.threads;
      cfg.log = [&](const std::string& line) { log << "crossval: " << line << "\n"; };
      const auto reports = run_comparison(ds, s.methods, cfg);

      ConfigEcho echo = {{"data", s.data_path},
                         {"samples", std::to_string(ds.size())},
                         {"T", std::to_string(ds.num_timestamps)},
                         {"D", std::to_string(ds.num_features)},
                         {"classes", std::to_string(ds.num_classes())},
                         {"folds", std::to_string(s.folds)},
                         {"seed", std::to_string(s.seed)},
                         {"normalization", "z-score per (timestep, feature), fit on training folds"}};
      std::string methods;
      for (auto m : s.methods) methods += (methods.empty() ? "" : ",") + std::string(method_name(m));
      echo.push_back({"methods", methods});
      bool any_lstm = false, any_baseline = false;
      for (auto m : s.methods) {
        any_lstm = any_lstm || uses_lstm(m);
        any_baseline = any_baseline || m != Method::lstm;
      }
      if (any_lstm) {
        for (auto& kv : detail::echo_train(s.train)) echo.push_back(kv);
      }
      if (any_baseline) {
        for (auto& kv : detail::echo_baselines(s)) echo.push_back(kv);
      }
      rm.add_config(echo);
      rm.write_output(s.output_dir, "report.txt", format_text_report(reports, echo));
      rm.write_output(s.output_dir, "report.kv", format_kv_report(reports, echo));
      break;
    }
  }
  rm.save(s.output_dir);
}

// Full command-line entry point: 0 success, 1 runtime failure, 2 usage error.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunSpec spec;
  try {
    spec = parse_run_spec(args);
  } catch (const HelpRequested& h) {
    out << h.text;
    return 0;
  } catch (const UsageError& e) {
    err << e.what() << "\n";
    return 2;
  }
  try {
    execute(spec, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace sitsrnn
