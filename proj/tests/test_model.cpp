#include <cmath>
#include <sstream>

#include "doctest.h"
#include "probation/model.hpp"
#include "probation/random.hpp"

using namespace probation;

namespace {

TokenSequence seq(std::vector<TokenId> tokens, std::size_t max_len = 8) {
  TokenSequence s;
  s.length = tokens.size();
  s.ids = tokens;
  s.ids.resize(max_len, Vocabulary::kPad);
  return s;
}

struct Toy {
  std::vector<TokenSequence> seqs;
  std::vector<Example> examples;
};

Toy toy_data(std::size_t n, std::uint64_t seed) {
  Toy t;
  Rng rng(seed);
  t.seqs.reserve(2 * n);
  for (std::size_t i = 0; i < 2 * n; ++i) {
    std::vector<TokenId> toks(2 + rng.below(5));
    for (auto& x : toks) x = static_cast<TokenId>(3 + rng.below(9));
    t.seqs.push_back(seq(toks));
  }
  for (std::size_t i = 0; i < n; ++i) {
    // Label: does token 5 appear in the main input.
    const auto& m = t.seqs[2 * i + 1];
    const int main = std::find(m.ids.begin(), m.ids.begin() + static_cast<long>(m.length), 5) !=
                     m.ids.begin() + static_cast<long>(m.length);
    t.examples.push_back({{&t.seqs[2 * i], &t.seqs[2 * i + 1]}, {1, main}});
  }
  return t;
}

NetworkShape tiny_shape() { return {12, 6, 4, 0.3, 0.3}; }

bool same_params(const Network& a, const Network& b, const std::string& prefix = "") {
  const auto pa = a.parameters(), pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].name.rfind(prefix, 0) != 0) continue;
    if (!(*pa[i].tensor == *pb[i].tensor)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("forward_head") {
  Rng rng(1);
  ClassifierParams p = init_classifier(4, 3, rng);
  const std::vector<double> w{0.3, -1.0, 2.0, 0.1};

  ClassifierParams zero = zeros_like(p);
  const ProbPair half = forward_head(w, zero);
  CHECK(half[0] == 0.5);
  CHECK(half[1] == 0.5);

  zero.output_bias.data = {std::log(3.0), 0.0};
  const ProbPair q = forward_head(w, zero);
  CHECK(q[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(q[1] == doctest::Approx(0.25).epsilon(1e-12));

  for (int i = 0; i < 100; ++i) {
    std::vector<double> x(4);
    for (double& v : x) v = rng.uniform(-50, 50);
    const ProbPair r = forward_head(x, p);
    CHECK(r[0] + r[1] == doctest::Approx(1.0).epsilon(1e-9));
  }
  const ProbPair big = softmax2(1000.0, 0.0);
  CHECK(big[0] == 1.0);
  CHECK(std::isfinite(big[1]));

  CHECK_THROWS_AS(forward_head(std::vector<double>{0, std::nan(""), 0, 0}, p), NumericalError);
  CHECK_THROWS_AS(forward_head(std::vector<double>{0, INFINITY, 0, 0}, p), NumericalError);
}

TEST_CASE("cross_entropy and joint_loss") {
  CHECK(std::abs(cross_entropy({0.5, 0.5}, 0) - std::log(2.0)) < 1e-9);
  CHECK(std::abs(cross_entropy({0.5, 0.5}, 1) - std::log(2.0)) < 1e-9);
  CHECK(cross_entropy({0.9, 0.1}, 0) == doctest::Approx(0.105361).epsilon(1e-5));
  CHECK(cross_entropy({1.0, 0.0}, 1) == doctest::Approx(27.631021).epsilon(1e-6));

  CHECK(joint_loss(1.0, 0.5, 0.1).total == 1.05);
  CHECK(joint_loss(1.0, 7.3, 0.0).total == 1.0);
  CHECK(joint_loss(0.0, 0.0, 0.7).total == 0.0);
  const LossBreakdown b = joint_loss(0.3, 0.2, 0.4);
  CHECK(b.total == 0.3 + 0.4 * 0.2);
  CHECK_THROWS(joint_loss(-1.0, 0.0, 0.1));
  CHECK_THROWS(joint_loss(1.0, -0.1, 0.1));
  CHECK_THROWS(joint_loss(1.0, 0.1, -0.1));
}

TEST_CASE("backward") {
  const Toy t = toy_data(6, 2);
  const Network net = make_joint(tiny_shape(), 5);

  SUBCASE("lambda 0 isolates the auxiliary branch") {
    Network g = zeros_like(net);
    const LossBreakdown l = backward(net, t.examples, 0.0, Mode::Train, 1, g);
    CHECK(l.total == l.l_main);
    for (const auto& p : std::as_const(g).parameters()) {
      if (p.name.rfind("aux.", 0) != 0) continue;
      for (double x : p.tensor->data) CHECK(x == 0.0);
    }
  }

  SUBCASE("auxiliary gradients are linear in lambda") {
    Network g1 = zeros_like(net), g2 = zeros_like(net);
    backward(net, t.examples, 0.25, Mode::Train, 3, g1);
    backward(net, t.examples, 0.5, Mode::Train, 3, g2);
    const auto p1 = std::as_const(g1).parameters(), p2 = std::as_const(g2).parameters();
    for (std::size_t i = 0; i < p1.size(); ++i) {
      const bool aux = p1[i].name.rfind("aux.", 0) == 0;
      for (std::size_t k = 0; k < p1[i].tensor->data.size(); ++k) {
        const double a = p1[i].tensor->data[k], b = p2[i].tensor->data[k];
        CHECK(std::abs((aux ? 2.0 * a : a) - b) <= 1e-12 * (1.0 + std::abs(b)));
      }
    }
  }

  SUBCASE("repeated batch gives the same mean gradient") {
    std::vector<Example> doubled = t.examples;
    doubled.insert(doubled.end(), t.examples.begin(), t.examples.end());
    Network g1 = zeros_like(net), g2 = zeros_like(net);
    backward(net, t.examples, 0.1, Mode::Infer, 0, g1);
    backward(net, doubled, 0.1, Mode::Infer, 0, g2);
    const auto p1 = std::as_const(g1).parameters(), p2 = std::as_const(g2).parameters();
    for (std::size_t i = 0; i < p1.size(); ++i) {
      for (std::size_t k = 0; k < p1[i].tensor->data.size(); ++k) {
        CHECK(std::abs(p1[i].tensor->data[k] - p2[i].tensor->data[k]) <= 1e-12);
      }
    }
  }

  SUBCASE("deterministic") {
    Network g1 = zeros_like(net), g2 = zeros_like(net);
    backward(net, t.examples, 0.1, Mode::Train, 9, g1);
    backward(net, t.examples, 0.1, Mode::Train, 9, g2);
    CHECK(same_params(g1, g2));
  }

  SUBCASE("batch_loss agrees with backward") {
    Network g = zeros_like(net);
    const LossBreakdown a = backward(net, t.examples, 0.1, Mode::Train, 4, g);
    const LossBreakdown b = batch_loss(net, t.examples, 0.1, Mode::Train, 4);
    CHECK(a.total == b.total);
    CHECK(a.l_aux == b.l_aux);
  }
}

TEST_CASE("adam_step") {
  Tensor theta(1, 1), grad(1, 1);
  grad.data[0] = 1.0;
  std::vector<NamedTensor> params{{"theta", &theta}};
  std::vector<ConstNamedTensor> cparams{{"theta", &theta}}, grads{{"theta", &grad}};
  OptimizerState s = make_optimizer(cparams, kReferenceLearningRate);
  adam_step(params, grads, s);
  CHECK(theta.data[0] == doctest::Approx(-9.99999e-6).epsilon(1e-9));
  CHECK(s.step == 1);

  Tensor t2(2, 3), zero(2, 3);
  for (double& x : t2.data) x = 0.7;
  const Tensor before = t2;
  std::vector<NamedTensor> p2{{"t", &t2}};
  std::vector<ConstNamedTensor> c2{{"t", &t2}}, g2{{"t", &zero}};
  OptimizerState s2 = make_optimizer(c2, 1e-3);
  adam_step(p2, g2, s2);
  CHECK(t2 == before);
  CHECK(s2.step == 1);

  Tensor wrong(3, 2);
  std::vector<ConstNamedTensor> bad{{"t", &wrong}};
  CHECK_THROWS(adam_step(p2, bad, s2));
}

TEST_CASE("train_network") {
  const Toy t = toy_data(48, 6);
  const Toy v = toy_data(16, 7);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  const Network init = make_joint(tiny_shape(), 11);

  SUBCASE("deterministic trajectories") {
    const TrainResult a = train_network(init, t.examples, v.examples, cfg, 3);
    const TrainResult b = train_network(init, t.examples, v.examples, cfg, 3);
    CHECK(same_params(a.model, b.model));
    REQUIRE(a.log.size() == 3);
    for (std::size_t e = 0; e < 3; ++e) CHECK(a.log[e].total == b.log[e].total);
  }
  SUBCASE("zero epochs keeps the initialization") {
    cfg.epochs = 0;
    const TrainResult r = train_network(init, t.examples, v.examples, cfg, 3);
    CHECK(same_params(r.model, init));
    CHECK(r.log.empty());
    CHECK(r.best_epoch == 0);
  }
  SUBCASE("lambda 0 leaves the auxiliary branch untouched") {
    cfg.lambda = 0.0;
    cfg.epochs = 1;
    const TrainResult r = train_network(init, t.examples, v.examples, cfg, 3);
    CHECK(same_params(r.model, init, "aux."));
    CHECK_FALSE(same_params(r.model, init, "main."));
  }
  SUBCASE("empty split") {
    CHECK_THROWS(train_network(init, {}, v.examples, cfg, 3));
  }
}

TEST_CASE("network serialization") {
  Network net = make_joint(tiny_shape(), 21, true);
  std::stringstream buf;
  write_network(buf, net);
  const Network back = read_network(buf);
  CHECK(back.shared_embedding);
  CHECK(same_params(back, net));
  std::stringstream broken("network 2 shared 0\nbranch aux dropout nonsense\n");
  CHECK_THROWS(read_network(broken));
}
