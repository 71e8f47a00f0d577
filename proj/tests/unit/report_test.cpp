#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "sitsrnn/report.hpp"

using namespace sitsrnn;

namespace {

std::vector<CrossValReport> sample_reports() {
  SyntheticConfig sc;
  sc.num_classes = 3;
  sc.samples_per_class = 9;
  sc.num_timestamps = 4;
  sc.num_features = 2;
  sc.motif_jitter = 0;
  sc.seed = 3;
  const auto ds = generate_synthetic(sc);
  CrossValConfig cfg;
  cfg.folds = 3;
  cfg.forest.num_trees = 5;
  const Method methods[] = {Method::rf_raw, Method::svm_raw};
  return run_comparison(ds, methods, cfg);
}

const ConfigEcho kEcho{{"data", "x.csv"}, {"seed", "0"}};

std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    EXPECT_NE(eq, std::string::npos) << line;
    EXPECT_TRUE(out.emplace(line.substr(0, eq), line.substr(eq + 1)).second) << "duplicate " << line;
  }
  return out;
}

}  // namespace

TEST(Report, FormattingIsDeterministic) {
  const auto a = sample_reports(), b = sample_reports();
  EXPECT_EQ(format_text_report(a, kEcho), format_text_report(b, kEcho));
  EXPECT_EQ(format_kv_report(a, kEcho), format_kv_report(b, kEcho));
}

TEST(Report, KeyValueFileCarriesEveryNumber) {
  const auto reports = sample_reports();
  const auto kv = parse_kv(format_kv_report(reports, kEcho));
  EXPECT_EQ(kv.at("report_version"), "1");
  EXPECT_EQ(kv.at("config.data"), "x.csv");
  EXPECT_EQ(kv.at("config.seed"), "0");
  for (const auto& r : reports) {
    const std::string p(method_name(r.method));
    EXPECT_EQ(std::stod(kv.at(p + ".pooled.macro_f")), r.pooled_metrics.macro_f);
    EXPECT_EQ(std::stod(kv.at(p + ".pooled.kappa")), r.pooled_metrics.kappa);
    EXPECT_EQ(std::stod(kv.at(p + ".fold_std.accuracy")), r.accuracy.stddev);
    EXPECT_EQ(std::stoull(kv.at(p + ".class.class1.support")), r.pooled_metrics.per_class[1].support);
    EXPECT_EQ(std::stod(kv.at(p + ".fold.2.weighted_f")), r.folds[2].metrics.weighted_f);
    std::ostringstream row;
    for (std::size_t j = 0; j < 3; ++j) row << (j ? "," : "") << r.pooled.at(0, j);
    EXPECT_EQ(kv.at(p + ".confusion.0"), row.str());
  }
}

TEST(Report, TextReportHasEverySection) {
  const auto reports = sample_reports();
  const auto text = format_text_report(reports, kEcho);
  for (const char* needle : {"configuration", "data = x.csv", "summary", "[rf_raw] per class",
                             "[svm_raw] per fold", "[svm_raw] pooled confusion matrix", "class2"}) {
    EXPECT_NE(text.find(needle), std::string::npos) << needle;
  }
}
