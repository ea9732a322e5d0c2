#include <cmath>
#include <numeric>
#include <utility>

#include "probation/evaluation.hpp"
#include "probation/model.hpp"

namespace probation {

void validate(const TrainConfig& cfg) {
  auto bad = [](const std::string& msg) { throw std::invalid_argument("train config: " + msg); };
  if (cfg.batch_size == 0) bad("batch_size must be positive");
  if (cfg.runs == 0) bad("runs must be positive");
  if (cfg.max_len == 0) bad("max_len must be positive");
  if (cfg.dim < 2) bad("dim must be at least 2");
  if (cfg.hidden == 0) bad("hidden must be positive");
  if (cfg.min_freq == 0) bad("min_freq must be positive");
  if (!(cfg.lambda >= 0.0)) bad("lambda must be non-negative");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) bad("dropout must be in [0,1)");
  if (!(cfg.learning_rate > 0.0)) bad("learning_rate must be positive");
  if (!(cfg.init_scale > 0.0)) bad("init_scale must be positive");
}

namespace {

Metrics evaluate_main(const Network& net, std::span<const Example> data) {
  std::vector<int> preds, golds;
  const std::size_t b = net.main_branch();
  for (const auto& ex : data) {
    const ProbPair p = infer_branch(net, b, *ex.inputs[b]).probs;
    preds.push_back(p[1] > p[0] ? 1 : 0);
    golds.push_back(ex.labels[b]);
  }
  return metrics(confusion(preds, golds));
}

}  // namespace

TrainResult train_network(Network init, std::span<const Example> train,
                          std::span<const Example> val, const TrainConfig& cfg,
                          std::uint64_t seed) {
  validate(cfg);
  if (train.empty()) throw std::invalid_argument("train_network: empty training split");

  TrainResult result;
  result.model = init;
  if (cfg.epochs == 0) return result;

  Network net = std::move(init);
  Network grads = zeros_like(net);
  OptimizerState opt = make_optimizer(std::as_const(net).parameters(), cfg.learning_rate);
  const auto params = net.parameters();
  const auto grad_view = static_cast<const Network&>(grads).parameters();

  double best_acc = -1.0;
  std::vector<std::size_t> order(train.size());
  std::vector<Example> batch;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(seed, 0x5407, epoch));
    shuffle_rng.shuffle(std::span<std::size_t>(order));

    double sum_main = 0.0, sum_aux = 0.0, sum_total = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(train[order[i]]);
      LossBreakdown loss;
      try {
        loss = backward(net, batch, cfg.lambda, Mode::Train, derive_seed(seed, 0xD209, epoch, steps),
                        grads);
      } catch (const NumericalError& e) {
        throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ", step " +
                             std::to_string(steps) + ": " + e.what());
      }
      adam_step(params, grad_view, opt);
      sum_main += loss.l_main;
      sum_aux += loss.l_aux;
      sum_total += loss.total;
      ++steps;
    }

    EpochLog log;
    log.epoch = epoch;
    log.l_main = sum_main / double(steps);
    log.l_aux = sum_aux / double(steps);
    log.total = sum_total / double(steps);
    if (!val.empty()) {
      const Metrics m = evaluate_main(net, val);
      log.val_acc = m.accuracy;
      log.val_f1 = m.macro_f1;
    }
    result.log.push_back(log);
    // Strictly better only, so ties keep the earlier epoch. Without a
    // validation split the last epoch wins.
    if (val.empty() || log.val_acc > best_acc) {
      best_acc = log.val_acc;
      result.best_epoch = epoch;
      result.model = net;
    }
  }
  return result;
}

}  // namespace probation
