#include <utility>
#include "probation/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "probation/model.hpp"
#include "probation/random.hpp"

namespace probation {

namespace {

TokenSequence random_sequence(Rng& rng, std::size_t vocab_size, std::size_t max_len) {
  TokenSequence s;
  s.length = 2 + rng.below(max_len - 1);
  s.ids.assign(max_len, Vocabulary::kPad);
  for (std::size_t i = 0; i < s.length; ++i) {
    s.ids[i] = static_cast<TokenId>(1 + rng.below(vocab_size - 1));
  }
  return s;
}

}  // namespace

GradCheckReport gradient_check(std::uint64_t seed, const GradCheckConfig& cfg) {
  NetworkShape shape{cfg.vocab_size, cfg.dim, cfg.hidden, cfg.dropout, cfg.init_scale};
  Network net = make_joint(shape, seed);
  // Heads start with Glorot weights; widen them so no gradient is tiny.
  Rng rng(derive_seed(seed, 0x6C4E));
  for (auto& br : net.branches) {
    for (Tensor* t : {&br.head.hidden_bias, &br.head.output_bias}) {
      for (double& x : t->data) x = rng.uniform(-cfg.init_scale, cfg.init_scale);
    }
  }

  const std::size_t max_len = 6;
  std::vector<TokenSequence> seqs;
  for (std::size_t i = 0; i < 2 * cfg.docs; ++i) seqs.push_back(random_sequence(rng, cfg.vocab_size, max_len));
  std::vector<Example> batch;
  for (std::size_t i = 0; i < cfg.docs; ++i) {
    const int aux = static_cast<int>(i % 2);
    batch.push_back({{&seqs[2 * i], &seqs[2 * i + 1]}, {aux, aux & static_cast<int>(rng.below(2))}});
  }

  const std::uint64_t dropout_seed = derive_seed(seed, 0xD409);
  Network grads = zeros_like(net);
  backward(net, batch, cfg.lambda, Mode::Train, dropout_seed, grads);

  GradCheckReport report;
  auto params = net.parameters();
  const auto analytic = std::as_const(grads).parameters();
  for (std::size_t g = 0; g < params.size(); ++g) {
    GroupError group{params[g].name, params[g].tensor->data.size(), 0.0};
    for (std::size_t k = 0; k < group.entries; ++k) {
      double& x = params[g].tensor->data[k];
      const double saved = x;
      x = saved + cfg.step;
      const double up = batch_loss(net, batch, cfg.lambda, Mode::Train, dropout_seed).total;
      x = saved - cfg.step;
      const double down = batch_loss(net, batch, cfg.lambda, Mode::Train, dropout_seed).total;
      x = saved;
      const double numeric = (up - down) / (2.0 * cfg.step);
      const double a = analytic[g].tensor->data[k];
      const double denom = std::max({std::abs(a), std::abs(numeric), cfg.floor});
      group.max_rel_error = std::max(group.max_rel_error, std::abs(a - numeric) / denom);
    }
    report.max_rel_error = std::max(report.max_rel_error, group.max_rel_error);
    report.groups.push_back(std::move(group));
  }
  return report;
}

}  // namespace probation
