#pragma once
// Confusion-matrix metrics with macro averaging over the two classes.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace probation {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t n() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> golds);

struct Metrics {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

struct MetricsReport {
  std::string task;
  Metrics mean;
  Metrics stddev;  // population spread over runs; zero for a single run
  std::size_t n = 0;
  std::vector<Metrics> runs;
};

// Per-class precision/recall/F1 use 0 for a zero denominator; MP, MR and
// macro-F1 are unweighted means over the two classes.
Metrics metrics(const ConfusionMatrix& cm);
MetricsReport metrics_report(const ConfusionMatrix& cm, std::string task);

// Mean and spread of several runs evaluated on the same n documents.
MetricsReport average_runs(std::span<const Metrics> runs, std::size_t n, std::string task);

// Percentages with two decimals, as in the comparison tables.
std::string percent(double fraction);

}  // namespace probation
