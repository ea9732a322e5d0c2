#include <cmath>

#include "doctest.h"
#include "probation/evaluation.hpp"
#include "probation/random.hpp"

using namespace probation;

namespace {

// Independent tally: per-class precision/recall/F1 from explicit counts.
Metrics tally(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  auto div = [](double a, double b) { return b > 0 ? a / b : 0.0; };
  const double n = double(tp + fp + fn + tn);
  double prec[2], rec[2], f[2];
  // class 1 = positive, class 0 = negative
  prec[1] = div(tp, tp + fp);
  rec[1] = div(tp, tp + fn);
  prec[0] = div(tn, tn + fn);
  rec[0] = div(tn, tn + fp);
  for (int c = 0; c < 2; ++c) f[c] = prec[c] + rec[c] > 0 ? 2 * prec[c] * rec[c] / (prec[c] + rec[c]) : 0.0;
  return {(tp + tn) / n, (prec[0] + prec[1]) / 2, (rec[0] + rec[1]) / 2, (f[0] + f[1]) / 2};
}

}  // namespace

TEST_CASE("confusion") {
  CHECK(confusion(std::vector{1, 0}, std::vector{1, 0}) == ConfusionMatrix{1, 0, 0, 1});
  CHECK(confusion(std::vector{1, 1}, std::vector{0, 0}).fp == 2);
  CHECK_THROWS(confusion(std::vector{1}, std::vector{1, 0}));
  CHECK_THROWS(confusion(std::vector<int>{}, std::vector<int>{}));

  Rng rng(4);
  std::vector<int> p(1000), g(1000);
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < 1000; ++i) {
    p[i] = static_cast<int>(rng.below(2));
    g[i] = static_cast<int>(rng.below(2));
    if (p[i] == 1 && g[i] == 1) ++tp;
    if (p[i] == 1 && g[i] == 0) ++fp;
    if (p[i] == 0 && g[i] == 1) ++fn;
    if (p[i] == 0 && g[i] == 0) ++tn;
  }
  CHECK(confusion(p, g) == ConfusionMatrix{tp, fp, fn, tn});
}

TEST_CASE("metrics examples") {
  const Metrics perfect = metrics({5, 0, 0, 7});
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.macro_precision == 1.0);
  CHECK(perfect.macro_recall == 1.0);
  CHECK(perfect.macro_f1 == 1.0);

  const Metrics m = metrics({40, 10, 20, 30});
  CHECK(m.accuracy == doctest::Approx(0.70).epsilon(1e-12));
  CHECK(m.macro_precision == doctest::Approx(0.70).epsilon(1e-12));
  CHECK(std::abs(m.macro_recall - 0.708333) < 1e-6);
  CHECK(std::abs(m.macro_f1 - 0.696970) < 1e-6);

  // Everything predicted positive: negative-class precision is 0 by convention.
  const Metrics all_pos = metrics({6, 4, 0, 0});
  CHECK(all_pos.macro_precision == doctest::Approx(0.3));
  CHECK(all_pos.macro_recall == doctest::Approx(0.5));

  CHECK_THROWS(metrics({0, 0, 0, 0}));
}

TEST_CASE("metrics agree with the tally oracle") {
  Rng rng(17);
  for (int i = 0; i < 100; ++i) {
    const std::size_t tp = rng.below(50), fp = rng.below(50), fn = rng.below(50), tn = 1 + rng.below(50);
    const Metrics a = metrics({tp, fp, fn, tn});
    const Metrics b = tally(tp, fp, fn, tn);
    CHECK(std::abs(a.accuracy - b.accuracy) <= 1e-12);
    CHECK(std::abs(a.macro_precision - b.macro_precision) <= 1e-12);
    CHECK(std::abs(a.macro_recall - b.macro_recall) <= 1e-12);
    CHECK(std::abs(a.macro_f1 - b.macro_f1) <= 1e-12);
    for (double x : {a.accuracy, a.macro_precision, a.macro_recall, a.macro_f1}) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
    // Swapping the label convention.
    const Metrics s = metrics({tn, fn, fp, tp});
    CHECK(std::abs(a.accuracy - s.accuracy) <= 1e-12);
    CHECK(std::abs(a.macro_precision - s.macro_precision) <= 1e-12);
    CHECK(std::abs(a.macro_recall - s.macro_recall) <= 1e-12);
    CHECK(std::abs(a.macro_f1 - s.macro_f1) <= 1e-12);
  }
}

TEST_CASE("averaging runs") {
  const Metrics m = metrics({40, 10, 20, 30});
  const MetricsReport one = average_runs(std::vector{m}, 100, "task2");
  CHECK(one.mean.accuracy == m.accuracy);
  CHECK(one.stddev.accuracy == 0.0);
  CHECK(one.runs.size() == 1);

  const MetricsReport six = average_runs(std::vector<Metrics>(6, m), 100, "task2");
  CHECK(six.mean.macro_f1 == m.macro_f1);
  CHECK(six.mean.macro_recall == m.macro_recall);
  CHECK(six.stddev.macro_f1 == 0.0);
  CHECK(six.runs.size() == 6);

  const MetricsReport two = average_runs(std::vector{Metrics{0.5, 0.5, 0.5, 0.5}, Metrics{0.7, 0.7, 0.7, 0.7}}, 10, "x");
  CHECK(two.mean.accuracy == doctest::Approx(0.6));
  CHECK(two.stddev.accuracy == doctest::Approx(0.1));
  CHECK_THROWS(average_runs(std::vector<Metrics>{}, 10, "x"));

  const MetricsReport r = metrics_report({1, 0, 0, 1}, "task1");
  CHECK(r.task == "task1");
  CHECK(r.n == 2);
}

TEST_CASE("percent") {
  CHECK(percent(0.881549) == "88.15");
  CHECK(percent(1.0) == "100.00");
  CHECK(percent(0.0) == "0.00");
}
