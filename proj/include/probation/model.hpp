#pragma once
// Classification heads, losses, Adam and the mini-batch training loop.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "probation/encoding.hpp"
#include "probation/tensor.hpp"

namespace probation {

using ProbPair = std::array<double, 2>;

// Two-layer perceptron: tanh hidden layer, two logits.
struct ClassifierParams {
  Tensor hidden;       // h x d
  Tensor hidden_bias;  // 1 x h
  Tensor output;       // 2 x h
  Tensor output_bias;  // 1 x 2
};

ClassifierParams init_classifier(std::size_t dim, std::size_t hidden, Rng& rng);
ClassifierParams zeros_like(const ClassifierParams& p);

ProbPair softmax2(double logit0, double logit1);

struct HeadTrace {
  std::vector<double> input;
  std::vector<double> hidden;
  ProbPair probs{};
};

HeadTrace head_forward(std::span<const double> w, const ClassifierParams& p);
ProbPair forward_head(std::span<const double> w, const ClassifierParams& p);
// Accumulates parameter gradients; returns d(loss)/d(w).
std::vector<double> head_backward(const HeadTrace& trace, const ProbPair& dlogits,
                                  const ClassifierParams& p, ClassifierParams& grads);

inline constexpr double kProbClamp = 1e-12;

// -log(max(probs[gold], 1e-12))
double cross_entropy(const ProbPair& probs, int gold);

struct LossBreakdown {
  double l_main = 0.0;
  double l_aux = 0.0;
  double lambda = 0.0;
  double total = 0.0;
};

LossBreakdown joint_loss(double l_main, double l_aux, double lambda);

// A network is one or two (encoder, head) branches. With two branches,
// branch 0 is the auxiliary task and branch 1 the main task; a single branch
// is trained as the main task alone.
struct Branch {
  std::string name;
  EncoderParams encoder;
  ClassifierParams head;
};

struct Network {
  std::vector<Branch> branches;
  // Branches after the first read branch 0's embedding table.
  bool shared_embedding = false;

  bool joint() const { return branches.size() == 2; }
  std::size_t main_branch() const { return branches.size() - 1; }
  const Tensor& embedding(std::size_t b) const;
  Tensor& embedding(std::size_t b);

  std::vector<NamedTensor> parameters();
  std::vector<ConstNamedTensor> parameters() const;
};

Network zeros_like(const Network& net);

// Wider than a +-0.05 start; a narrow start leaves the pooled features
// nearly uniform and the joint task stalls near 93% test accuracy.
inline constexpr double kDefaultInitScale = 0.3;

struct NetworkShape {
  std::size_t vocab_size = 0;
  std::size_t dim = 64;
  std::size_t hidden = 32;
  double dropout = 0.3;
  double init_scale = kDefaultInitScale;
};

Network make_single_task(const NetworkShape& shape, std::uint64_t seed, std::string name = "main");
Network make_joint(const NetworkShape& shape, std::uint64_t seed, bool shared_embedding = false);

// One training/evaluation instance: an input and gold label per branch.
struct Example {
  std::vector<const TokenSequence*> inputs;
  std::vector<int> labels;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mean loss over the batch. Dropout masks are drawn from dropout_seed, so a
// call with the same arguments is exactly repeatable.
LossBreakdown batch_loss(const Network& net, std::span<const Example> batch, double lambda,
                         Mode mode, std::uint64_t dropout_seed);

// Exact gradients of batch_loss(...).total, written into grads (zeroed first).
LossBreakdown backward(const Network& net, std::span<const Example> batch, double lambda,
                       Mode mode, std::uint64_t dropout_seed, Network& grads);

struct BranchOutput {
  ProbPair probs{};
  std::vector<double> alpha;
};

BranchOutput infer_branch(const Network& net, std::size_t branch, const TokenSequence& input);

// --- optimizer ---------------------------------------------------------------

struct OptimizerState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

OptimizerState make_optimizer(std::span<const ConstNamedTensor> params, double learning_rate);
void adam_step(std::span<const NamedTensor> params, std::span<const ConstNamedTensor> grads,
               OptimizerState& state);

// --- training ---------------------------------------------------------------

inline constexpr double kReferenceLearningRate = 1e-5;

struct TrainConfig {
  std::size_t batch_size = 16;
  std::size_t epochs = 10;
  double lambda = 0.1;
  std::uint64_t seed = 0;
  std::size_t runs = 1;
  double dropout = 0.3;
  std::size_t max_len = kDefaultMaxLen;
  std::size_t dim = 64;
  std::size_t hidden = 32;
  double learning_rate = 1e-3;
  bool shared_embedding = false;
  std::size_t min_freq = 1;
  // Encoder weights start uniform in [-init_scale, init_scale].
  double init_scale = kDefaultInitScale;
};

void validate(const TrainConfig& cfg);

struct EpochLog {
  std::size_t epoch = 0;
  double l_main = 0.0;
  double l_aux = 0.0;
  double total = 0.0;
  double val_acc = 0.0;
  double val_f1 = 0.0;
};

struct TrainResult {
  Network model;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;  // 0 = initialization kept
};

// Shuffled mini-batch Adam; keeps the parameters of the epoch with the best
// main-task validation accuracy.
TrainResult train_network(Network init, std::span<const Example> train,
                          std::span<const Example> val, const TrainConfig& cfg,
                          std::uint64_t seed);

// --- serialization ---------------------------------------------------------

void write_network(std::ostream& out, const Network& net);
Network read_network(std::istream& in);

}  // namespace probation
