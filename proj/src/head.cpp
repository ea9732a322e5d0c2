#include <algorithm>
#include <cmath>

#include "probation/kernels.hpp"
#include "probation/model.hpp"

namespace probation {

ClassifierParams init_classifier(std::size_t dim, std::size_t hidden, Rng& rng) {
  ClassifierParams p;
  p.hidden = Tensor(hidden, dim);
  p.hidden_bias = Tensor(1, hidden);
  p.output = Tensor(2, hidden);
  p.output_bias = Tensor(1, 2);
  // Glorot-uniform weights, zero biases.
  const double a1 = std::sqrt(6.0 / double(dim + hidden));
  const double a2 = std::sqrt(6.0 / double(hidden + 2));
  for (double& x : p.hidden.data) x = rng.uniform(-a1, a1);
  for (double& x : p.output.data) x = rng.uniform(-a2, a2);
  return p;
}

ClassifierParams zeros_like(const ClassifierParams& p) {
  return {Tensor(p.hidden.rows, p.hidden.cols), Tensor(p.hidden_bias.rows, p.hidden_bias.cols),
          Tensor(p.output.rows, p.output.cols), Tensor(p.output_bias.rows, p.output_bias.cols)};
}

ProbPair softmax2(double logit0, double logit1) {
  const double m = std::max(logit0, logit1);
  const double e0 = std::exp(logit0 - m);
  const double e1 = std::exp(logit1 - m);
  const double z = e0 + e1;
  return {e0 / z, e1 / z};
}

HeadTrace head_forward(std::span<const double> w, const ClassifierParams& p) {
  const auto& k = kernels::active();
  const std::size_t h = p.hidden.rows;
  const std::size_t d = p.hidden.cols;
  if (w.size() != d) throw std::invalid_argument("head input has the wrong dimension");
  for (double x : w) {
    if (!std::isfinite(x)) throw NumericalError("non-finite input to classifier head");
  }
  HeadTrace tr;
  tr.input.assign(w.begin(), w.end());
  tr.hidden = p.hidden_bias.data;
  k.gemv(p.hidden.data.data(), w.data(), tr.hidden.data(), h, d);
  for (double& z : tr.hidden) z = std::tanh(z);
  std::array<double, 2> logits{p.output_bias.data[0], p.output_bias.data[1]};
  k.gemv(p.output.data.data(), tr.hidden.data(), logits.data(), 2, h);
  tr.probs = softmax2(logits[0], logits[1]);
  return tr;
}

ProbPair forward_head(std::span<const double> w, const ClassifierParams& p) {
  return head_forward(w, p).probs;
}

std::vector<double> head_backward(const HeadTrace& tr, const ProbPair& dlogits,
                                  const ClassifierParams& p, ClassifierParams& g) {
  const auto& k = kernels::active();
  const std::size_t h = p.hidden.rows;
  const std::size_t d = p.hidden.cols;
  k.ger(1.0, dlogits.data(), tr.hidden.data(), g.output.data.data(), 2, h);
  g.output_bias.data[0] += dlogits[0];
  g.output_bias.data[1] += dlogits[1];
  std::vector<double> dz(h, 0.0);
  k.gemv_t(p.output.data.data(), dlogits.data(), dz.data(), 2, h);
  for (std::size_t j = 0; j < h; ++j) dz[j] *= 1.0 - tr.hidden[j] * tr.hidden[j];
  k.axpy(1.0, dz.data(), g.hidden_bias.data.data(), h);
  k.ger(1.0, dz.data(), tr.input.data(), g.hidden.data.data(), h, d);
  std::vector<double> dw(d, 0.0);
  k.gemv_t(p.hidden.data.data(), dz.data(), dw.data(), h, d);
  return dw;
}

double cross_entropy(const ProbPair& probs, int gold) {
  if (gold != 0 && gold != 1) throw std::invalid_argument("gold label must be 0 or 1");
  return -std::log(std::max(probs[static_cast<std::size_t>(gold)], kProbClamp));
}

LossBreakdown joint_loss(double l_main, double l_aux, double lambda) {
  if (!(l_main >= 0.0) || !(l_aux >= 0.0)) throw std::invalid_argument("losses must be non-negative");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  return {l_main, l_aux, lambda, l_main + lambda * l_aux};
}

}  // namespace probation
