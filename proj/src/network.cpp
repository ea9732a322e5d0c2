#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "probation/model.hpp"

namespace probation {

namespace {

void append_branch(const std::string& prefix, EncoderParams& e, ClassifierParams& h,
                   std::vector<NamedTensor>& out) {
  if (e.embedding.rows > 0) out.push_back({prefix + ".encoder.embedding", &e.embedding});
  out.push_back({prefix + ".encoder.attn_w", &e.attn_w});
  out.push_back({prefix + ".encoder.attn_b", &e.attn_b});
  out.push_back({prefix + ".encoder.attn_u", &e.attn_u});
  out.push_back({prefix + ".encoder.projection", &e.projection});
  out.push_back({prefix + ".head.hidden", &h.hidden});
  out.push_back({prefix + ".head.hidden_bias", &h.hidden_bias});
  out.push_back({prefix + ".head.output", &h.output});
  out.push_back({prefix + ".head.output_bias", &h.output_bias});
}

// d(cross_entropy)/d(logits), scaled.
ProbPair ce_grad(const ProbPair& probs, int gold, double scale) {
  if (probs[static_cast<std::size_t>(gold)] < kProbClamp) return {0.0, 0.0};  // clamped: flat
  ProbPair g{probs[0] * scale, probs[1] * scale};
  g[static_cast<std::size_t>(gold)] -= scale;
  return g;
}

void check_example(const Network& net, const Example& ex) {
  if (ex.inputs.size() != net.branches.size() || ex.labels.size() != net.branches.size()) {
    throw std::invalid_argument("example does not match the network's branch count");
  }
}

}  // namespace

const Tensor& Network::embedding(std::size_t b) const {
  return (shared_embedding && b > 0) ? branches[0].encoder.embedding
                                     : branches.at(b).encoder.embedding;
}

Tensor& Network::embedding(std::size_t b) {
  return (shared_embedding && b > 0) ? branches[0].encoder.embedding
                                     : branches.at(b).encoder.embedding;
}

std::vector<NamedTensor> Network::parameters() {
  std::vector<NamedTensor> out;
  for (auto& br : branches) append_branch(br.name, br.encoder, br.head, out);
  return out;
}

std::vector<ConstNamedTensor> Network::parameters() const {
  std::vector<ConstNamedTensor> out;
  for (const auto& t : const_cast<Network&>(*this).parameters()) out.push_back({t.name, t.tensor});
  return out;
}

Network zeros_like(const Network& net) {
  Network z;
  z.shared_embedding = net.shared_embedding;
  for (const auto& br : net.branches) {
    z.branches.push_back({br.name, zeros_like(br.encoder), zeros_like(br.head)});
  }
  return z;
}

Network make_single_task(const NetworkShape& shape, std::uint64_t seed, std::string name) {
  Rng rng(derive_seed(seed, 0x1417));
  Network net;
  Branch br;
  br.name = std::move(name);
  br.encoder = init_encoder(shape.vocab_size, shape.dim, shape.dropout, rng, shape.init_scale);
  br.head = init_classifier(shape.dim, shape.hidden, rng);
  net.branches.push_back(std::move(br));
  return net;
}

Network make_joint(const NetworkShape& shape, std::uint64_t seed, bool shared_embedding) {
  Rng rng(derive_seed(seed, 0x1417));
  Network net;
  net.shared_embedding = shared_embedding;
  for (const char* name : {"aux", "main"}) {
    Branch br;
    br.name = name;
    const bool own_embedding = !(shared_embedding && net.branches.size() == 1);
    br.encoder = init_encoder(shape.vocab_size, shape.dim, shape.dropout, rng, shape.init_scale,
                              own_embedding);
    br.head = init_classifier(shape.dim, shape.hidden, rng);
    net.branches.push_back(std::move(br));
  }
  return net;
}

namespace {

// Shared between batch_loss and backward so both see identical dropout.
template <typename OnExample>
LossBreakdown run_batch(const Network& net, std::span<const Example> batch, double lambda,
                        Mode mode, std::uint64_t dropout_seed, OnExample&& on_example) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  const std::size_t nb = net.branches.size();
  std::vector<double> sums(nb, 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Example& ex = batch[i];
    check_example(net, ex);
    for (std::size_t b = 0; b < nb; ++b) {
      const Branch& br = net.branches[b];
      EncoderTrace enc = encoder_forward(*ex.inputs[b], net.embedding(b), br.encoder, mode,
                                         derive_seed(dropout_seed, i, b));
      HeadTrace head = head_forward(enc.w, br.head);
      const double loss = cross_entropy(head.probs, ex.labels[b]);
      if (!std::isfinite(loss)) {
        throw NumericalError("non-finite loss in branch '" + br.name + "'");
      }
      sums[b] += loss;
      on_example(b, ex, enc, head);
    }
  }
  const double n = static_cast<double>(batch.size());
  if (nb == 2) return joint_loss(sums[1] / n, sums[0] / n, lambda);
  return joint_loss(sums[0] / n, 0.0, lambda);
}

}  // namespace

LossBreakdown batch_loss(const Network& net, std::span<const Example> batch, double lambda,
                         Mode mode, std::uint64_t dropout_seed) {
  return run_batch(net, batch, lambda, mode, dropout_seed,
                   [](std::size_t, const Example&, const EncoderTrace&, const HeadTrace&) {});
}

LossBreakdown backward(const Network& net, std::span<const Example> batch, double lambda,
                       Mode mode, std::uint64_t dropout_seed, Network& grads) {
  for (auto& t : grads.parameters()) t.tensor->zero();
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const std::size_t main = net.main_branch();
  LossBreakdown loss = run_batch(
      net, batch, lambda, mode, dropout_seed,
      [&](std::size_t b, const Example& ex, const EncoderTrace& enc, const HeadTrace& head) {
        const double weight = (b == main ? 1.0 : lambda) * inv_n;
        if (weight == 0.0) return;
        const Branch& br = net.branches[b];
        Branch& gb = grads.branches[b];
        const ProbPair dlogits = ce_grad(head.probs, ex.labels[b], weight);
        const std::vector<double> dw = head_backward(head, dlogits, br.head, gb.head);
        encoder_backward(enc, dw, net.embedding(b), br.encoder, gb.encoder, grads.embedding(b));
      });
  for (const auto& t : grads.parameters()) {
    for (double x : t.tensor->data) {
      if (!std::isfinite(x)) throw NumericalError("non-finite gradient in " + t.name);
    }
  }
  return loss;
}

BranchOutput infer_branch(const Network& net, std::size_t branch, const TokenSequence& input) {
  const Branch& br = net.branches.at(branch);
  EncoderTrace enc = encoder_forward(input, net.embedding(branch), br.encoder, Mode::Infer, 0);
  BranchOutput out;
  out.probs = forward_head(enc.w, br.head);
  out.alpha = std::move(enc.alpha);
  return out;
}

// --- serialization -----------------------------------------------------------

void write_network(std::ostream& out, const Network& net) {
  out << "network " << net.branches.size() << " shared " << (net.shared_embedding ? 1 : 0)
      << '\n';
  char buf[64];
  for (const auto& br : net.branches) {
    std::snprintf(buf, sizeof buf, "%a", br.encoder.dropout_rate);
    out << "branch " << br.name << " dropout " << buf << '\n';
    std::vector<NamedTensor> tensors;
    append_branch(br.name, const_cast<EncoderParams&>(br.encoder),
                  const_cast<ClassifierParams&>(br.head), tensors);
    for (const auto& t : tensors) {
      out << "tensor " << t.name << ' ' << t.tensor->rows << ' ' << t.tensor->cols << '\n';
      for (std::size_t i = 0; i < t.tensor->data.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%a", t.tensor->data[i]);
        out << buf << ((i + 1) % 8 == 0 || i + 1 == t.tensor->data.size() ? '\n' : ' ');
      }
    }
  }
  out << "end network\n";
}

namespace {

void expect(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word) {
    throw std::runtime_error("checkpoint: expected '" + word + "', found '" + got + "'");
  }
}

double read_double(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw std::runtime_error("checkpoint: truncated tensor data");
  char* end = nullptr;
  const double x = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') throw std::runtime_error("checkpoint: bad number " + tok);
  return x;
}

void read_tensor(std::istream& in, const std::string& name, Tensor& t) {
  expect(in, "tensor");
  std::string got;
  std::size_t rows = 0, cols = 0;
  if (!(in >> got >> rows >> cols) || got != name) {
    throw std::runtime_error("checkpoint: expected tensor " + name + ", found " + got);
  }
  t = Tensor(rows, cols);
  for (double& x : t.data) x = read_double(in);
}

}  // namespace

Network read_network(std::istream& in) {
  expect(in, "network");
  std::size_t n = 0;
  int shared = 0;
  in >> n;
  expect(in, "shared");
  in >> shared;
  if (!in || n < 1 || n > 2) throw std::runtime_error("checkpoint: bad network header");
  Network net;
  net.shared_embedding = shared != 0;
  for (std::size_t b = 0; b < n; ++b) {
    Branch br;
    expect(in, "branch");
    in >> br.name;
    expect(in, "dropout");
    br.encoder.dropout_rate = read_double(in);
    const std::string p = br.name;
    if (!(net.shared_embedding && b > 0)) read_tensor(in, p + ".encoder.embedding", br.encoder.embedding);
    read_tensor(in, p + ".encoder.attn_w", br.encoder.attn_w);
    read_tensor(in, p + ".encoder.attn_b", br.encoder.attn_b);
    read_tensor(in, p + ".encoder.attn_u", br.encoder.attn_u);
    read_tensor(in, p + ".encoder.projection", br.encoder.projection);
    if (net.shared_embedding && b > 0) br.encoder.embedding = Tensor(0, br.encoder.attn_w.rows);
    read_tensor(in, p + ".head.hidden", br.head.hidden);
    read_tensor(in, p + ".head.hidden_bias", br.head.hidden_bias);
    read_tensor(in, p + ".head.output", br.head.output);
    read_tensor(in, p + ".head.output_bias", br.head.output_bias);
    br.encoder.check();
    net.branches.push_back(std::move(br));
  }
  expect(in, "end");
  expect(in, "network");
  return net;
}

}  // namespace probation
