#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "probation/evaluation.hpp"

namespace probation {

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> golds) {
  if (preds.size() != golds.size()) {
    throw std::invalid_argument("confusion: " + std::to_string(preds.size()) + " predictions vs " +
                                std::to_string(golds.size()) + " gold labels");
  }
  if (preds.empty()) throw std::invalid_argument("confusion: no predictions");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] != 0;
    const bool g = golds[i] != 0;
    if (p && g) {
      ++cm.tp;
    } else if (p) {
      ++cm.fp;
    } else if (g) {
      ++cm.fn;
    } else {
      ++cm.tn;
    }
  }
  return cm;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

Metrics metrics(const ConfusionMatrix& cm) {
  if (cm.n() == 0) throw std::invalid_argument("metrics: empty confusion matrix");
  const double p_pos = ratio(cm.tp, cm.tp + cm.fp);
  const double r_pos = ratio(cm.tp, cm.tp + cm.fn);
  const double p_neg = ratio(cm.tn, cm.tn + cm.fn);
  const double r_neg = ratio(cm.tn, cm.tn + cm.fp);
  Metrics m;
  m.accuracy = ratio(cm.tp + cm.tn, cm.n());
  m.macro_precision = (p_pos + p_neg) / 2.0;
  m.macro_recall = (r_pos + r_neg) / 2.0;
  m.macro_f1 = (f1(p_pos, r_pos) + f1(p_neg, r_neg)) / 2.0;
  return m;
}

MetricsReport metrics_report(const ConfusionMatrix& cm, std::string task) {
  MetricsReport r;
  r.task = std::move(task);
  r.mean = metrics(cm);
  r.n = cm.n();
  r.runs = {r.mean};
  return r;
}

MetricsReport average_runs(std::span<const Metrics> runs, std::size_t n, std::string task) {
  if (runs.empty()) throw std::invalid_argument("average_runs: no runs");
  MetricsReport r;
  r.task = std::move(task);
  r.n = n;
  r.runs.assign(runs.begin(), runs.end());
  const double k = static_cast<double>(runs.size());
  auto field = [&](double Metrics::*f, double Metrics::*out_mean) {
    // Offsets from the first run keep identical runs exact.
    const double first = runs.front().*f;
    double offset = 0.0;
    for (const auto& m : runs) offset += m.*f - first;
    const double mean = first + offset / k;
    double var = 0.0;
    for (const auto& m : runs) var += (m.*f - mean) * (m.*f - mean);
    r.mean.*out_mean = mean;
    r.stddev.*out_mean = std::sqrt(var / k);
  };
  field(&Metrics::accuracy, &Metrics::accuracy);
  field(&Metrics::macro_precision, &Metrics::macro_precision);
  field(&Metrics::macro_recall, &Metrics::macro_recall);
  field(&Metrics::macro_f1, &Metrics::macro_f1);
  return r;
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
  return buf;
}

}  // namespace probation
