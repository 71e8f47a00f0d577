#pragma once

#include <cstdio>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sitsrnn/crossval.hpp"
#include "sitsrnn/data.hpp"

namespace sitsrnn {

// Ordered key/value pairs echoed verbatim into reports and run manifests.
using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

namespace detail {

inline std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

inline std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace detail

// Human-readable report for one or more methods evaluated on the same folds.
inline std::string format_text_report(std::span<const CrossValReport> reports,
                                      const ConfigEcho& config) {
  std::ostringstream out;
  out << "configuration\n";
  for (const auto& [k, v] : config) out << "  " << k << " = " << v << "\n";

  out << "\nsummary (pooled confusion matrix; fold mean +- std)\n";
  out << "  " << detail::pad_right("method", 10) << detail::pad("accuracy", 10)
      << detail::pad("kappa", 10) << detail::pad("macro_f", 10) << detail::pad("weighted_f", 12)
      << "   fold accuracy       fold macro_f\n";
  for (const auto& r : reports) {
    const auto& m = r.pooled_metrics;
    out << "  " << detail::pad_right(std::string(method_name(r.method)), 10)
        << detail::pad(detail::fixed(m.accuracy), 10) << detail::pad(detail::fixed(m.kappa), 10)
        << detail::pad(detail::fixed(m.macro_f), 10) << detail::pad(detail::fixed(m.weighted_f), 12)
        << "   " << detail::fixed(r.accuracy.mean) << " +- " << detail::fixed(r.accuracy.stddev)
        << "   " << detail::fixed(r.macro_f.mean) << " +- " << detail::fixed(r.macro_f.stddev)
        << "\n";
  }

  for (const auto& r : reports) {
    const std::string name(method_name(r.method));
    std::size_t name_width = 5;
    for (const auto& c : r.class_names) name_width = std::max(name_width, c.size());
    out << "\n[" << name << "] per class (pooled)\n";
    out << "  " << detail::pad_right("class", name_width) << detail::pad("support", 9)
        << detail::pad("precision", 11) << detail::pad("recall", 9) << detail::pad("f", 9) << "\n";
    for (std::size_t c = 0; c < r.class_names.size(); ++c) {
      const auto& m = r.pooled_metrics.per_class[c];
      out << "  " << detail::pad_right(r.class_names[c], name_width)
          << detail::pad(std::to_string(m.support), 9) << detail::pad(detail::fixed(m.precision), 11)
          << detail::pad(detail::fixed(m.recall), 9) << detail::pad(detail::fixed(m.f_measure), 9)
          << "\n";
    }
    out << "\n[" << name << "] per fold\n";
    out << "  fold   train    test  accuracy     kappa   macro_f  weighted_f\n";
    for (const auto& f : r.folds) {
      out << "  " << detail::pad(std::to_string(f.fold), 4) << detail::pad(std::to_string(f.train_size), 8)
          << detail::pad(std::to_string(f.test_size), 8) << detail::pad(detail::fixed(f.metrics.accuracy), 10)
          << detail::pad(detail::fixed(f.metrics.kappa), 10)
          << detail::pad(detail::fixed(f.metrics.macro_f), 10)
          << detail::pad(detail::fixed(f.metrics.weighted_f), 12) << "\n";
    }
    out << "\n[" << name << "] pooled confusion matrix (rows = truth)\n";
    const std::size_t k = r.pooled.num_classes();
    std::size_t cell = 1;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) cell = std::max(cell, std::to_string(r.pooled.at(i, j)).size());
    }
    for (std::size_t i = 0; i < k; ++i) {
      out << "  " << detail::pad_right(r.class_names[i], name_width);
      for (std::size_t j = 0; j < k; ++j) out << detail::pad(std::to_string(r.pooled.at(i, j)), cell + 1);
      out << "\n";
    }
  }
  return out.str();
}

// Machine-readable report: one key=value per line, doubles in shortest
// round-trip form.
inline std::string format_kv_report(std::span<const CrossValReport> reports, const ConfigEcho& config) {
  using detail::format_double;
  std::ostringstream out;
  out << "report_version=1\n";
  for (const auto& [k, v] : config) out << "config." << k << "=" << v << "\n";
  for (const auto& r : reports) {
    const std::string p = std::string(method_name(r.method)) + ".";
    const auto& m = r.pooled_metrics;
    out << p << "pooled.accuracy=" << format_double(m.accuracy) << "\n";
    out << p << "pooled.kappa=" << format_double(m.kappa) << "\n";
    out << p << "pooled.macro_f=" << format_double(m.macro_f) << "\n";
    out << p << "pooled.weighted_f=" << format_double(m.weighted_f) << "\n";
    const std::pair<const char*, const MeanStd*> summaries[] = {
        {"accuracy", &r.accuracy}, {"kappa", &r.kappa}, {"macro_f", &r.macro_f}, {"weighted_f", &r.weighted_f}};
    for (const auto& [key, ms] : summaries) {
      out << p << "fold_mean." << key << "=" << format_double(ms->mean) << "\n";
      out << p << "fold_std." << key << "=" << format_double(ms->stddev) << "\n";
    }
    for (std::size_t c = 0; c < r.class_names.size(); ++c) {
      const std::string q = p + "class." + r.class_names[c] + ".";
      const auto& cm = m.per_class[c];
      out << q << "support=" << cm.support << "\n";
      out << q << "precision=" << format_double(cm.precision) << "\n";
      out << q << "recall=" << format_double(cm.recall) << "\n";
      out << q << "f=" << format_double(cm.f_measure) << "\n";
    }
    for (const auto& f : r.folds) {
      const std::string q = p + "fold." + std::to_string(f.fold) + ".";
      out << q << "train_size=" << f.train_size << "\n";
      out << q << "test_size=" << f.test_size << "\n";
      out << q << "accuracy=" << format_double(f.metrics.accuracy) << "\n";
      out << q << "kappa=" << format_double(f.metrics.kappa) << "\n";
      out << q << "macro_f=" << format_double(f.metrics.macro_f) << "\n";
      out << q << "weighted_f=" << format_double(f.metrics.weighted_f) << "\n";
    }
    const std::size_t k = r.pooled.num_classes();
    for (std::size_t i = 0; i < k; ++i) {
      out << p << "confusion." << i << "=";
      for (std::size_t j = 0; j < k; ++j) out << (j ? "," : "") << r.pooled.at(i, j);
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace sitsrnn
