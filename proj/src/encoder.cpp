#include <cmath>
#include <fstream>
#include <iomanip>

#include "probation/encoding.hpp"
#include "probation/kernels.hpp"

namespace probation {

namespace {

void fill_uniform(Tensor& t, Rng& rng, double scale) {
  for (double& x : t.data) x = rng.uniform(-scale, scale);
}

bool all_finite(const Tensor& t) {
  for (double x : t.data)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

void EncoderParams::check() const {
  const std::size_t d = dim();
  if (d < 2) throw std::invalid_argument("encoder dimension must be at least 2");
  if (attn_w.cols != d || attn_b.cols != d || attn_u.cols != d || projection.rows != d ||
      projection.cols != d || (embedding.size() && embedding.cols != d)) {
    throw std::invalid_argument("encoder parameter shapes are inconsistent");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("dropout rate must be in [0,1)");
  }
  for (const Tensor* t : {&embedding, &attn_w, &attn_b, &attn_u, &projection}) {
    if (!all_finite(*t)) throw std::invalid_argument("encoder parameters must be finite");
  }
}

EncoderParams init_encoder(std::size_t vocab_size, std::size_t dim, double dropout_rate, Rng& rng,
                           double scale, bool with_embedding) {
  EncoderParams p;
  if (with_embedding) {
    p.embedding = Tensor(vocab_size, dim);
    fill_uniform(p.embedding, rng, scale);
  } else {
    p.embedding = Tensor(0, dim);
  }
  p.attn_w = Tensor(dim, dim);
  p.attn_b = Tensor(1, dim);
  p.attn_u = Tensor(1, dim);
  p.projection = Tensor(dim, dim);
  fill_uniform(p.attn_w, rng, scale);
  fill_uniform(p.attn_u, rng, scale);
  fill_uniform(p.projection, rng, scale);
  p.dropout_rate = dropout_rate;
  p.check();
  return p;
}

EncoderParams zeros_like(const EncoderParams& p) {
  EncoderParams z;
  z.embedding = Tensor(p.embedding.rows, p.embedding.cols);
  z.attn_w = Tensor(p.attn_w.rows, p.attn_w.cols);
  z.attn_b = Tensor(p.attn_b.rows, p.attn_b.cols);
  z.attn_u = Tensor(p.attn_u.rows, p.attn_u.cols);
  z.projection = Tensor(p.projection.rows, p.projection.cols);
  z.dropout_rate = p.dropout_rate;
  return z;
}

EncoderTrace encoder_forward(const TokenSequence& x, const Tensor& embedding,
                             const EncoderParams& p, Mode mode, std::uint64_t dropout_seed) {
  if (!x.encodable()) throw std::invalid_argument("cannot encode an all-PAD sequence");
  const auto& k = kernels::active();
  const std::size_t d = p.dim();
  const std::size_t n = x.length;

  EncoderTrace tr;
  tr.ids.assign(x.ids.begin(), x.ids.begin() + static_cast<std::ptrdiff_t>(n));
  tr.hidden = Tensor(n, d);
  tr.alpha.resize(n);
  std::vector<double> scores(n);
  double max_score = -INFINITY;
  for (std::size_t t = 0; t < n; ++t) {
    const auto id = static_cast<std::size_t>(tr.ids[t]);
    if (id >= embedding.rows) throw std::out_of_range("token id outside the embedding table");
    double* h = tr.hidden.row(t);
    std::copy(p.attn_b.data.begin(), p.attn_b.data.end(), h);
    k.gemv(p.attn_w.data.data(), embedding.row(id), h, d, d);
    for (std::size_t j = 0; j < d; ++j) h[j] = std::tanh(h[j]);
    scores[t] = k.dot(p.attn_u.data.data(), h, d);
    max_score = std::max(max_score, scores[t]);
  }
  double z = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    tr.alpha[t] = std::exp(scores[t] - max_score);
    z += tr.alpha[t];
  }
  for (double& a : tr.alpha) a /= z;

  tr.pooled.assign(d, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    k.axpy(tr.alpha[t], embedding.row(static_cast<std::size_t>(tr.ids[t])), tr.pooled.data(), d);
  }
  tr.w.assign(d, 0.0);
  k.gemv(p.projection.data.data(), tr.pooled.data(), tr.w.data(), d, d);

  if (mode == Mode::Train && p.dropout_rate > 0.0) {
    Rng rng(dropout_seed);
    const double keep_scale = 1.0 / (1.0 - p.dropout_rate);
    tr.dropout.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      tr.dropout[j] = rng.uniform() < p.dropout_rate ? 0.0 : keep_scale;
      tr.w[j] *= tr.dropout[j];
    }
  }
  return tr;
}

void encoder_backward(const EncoderTrace& tr, std::span<const double> dw, const Tensor& embedding,
                      const EncoderParams& p, EncoderParams& g, Tensor& embedding_grad) {
  const auto& k = kernels::active();
  const std::size_t d = p.dim();
  const std::size_t n = tr.ids.size();

  std::vector<double> dw_pre(dw.begin(), dw.end());
  if (!tr.dropout.empty()) {
    for (std::size_t j = 0; j < d; ++j) dw_pre[j] *= tr.dropout[j];
  }
  // w = P pooled
  k.ger(1.0, dw_pre.data(), tr.pooled.data(), g.projection.data.data(), d, d);
  std::vector<double> dpooled(d, 0.0);
  k.gemv_t(p.projection.data.data(), dw_pre.data(), dpooled.data(), d, d);

  // pooled = sum alpha_t e_t
  std::vector<double> dalpha(n);
  double mean = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double* e = embedding.row(static_cast<std::size_t>(tr.ids[t]));
    dalpha[t] = k.dot(dpooled.data(), e, d);
    mean += tr.alpha[t] * dalpha[t];
  }

  std::vector<double> da(d);
  for (std::size_t t = 0; t < n; ++t) {
    const auto id = static_cast<std::size_t>(tr.ids[t]);
    const double* e = embedding.row(id);
    double* de = embedding_grad.row(id);
    k.axpy(tr.alpha[t], dpooled.data(), de, d);

    // softmax: ds_t = alpha_t (dalpha_t - sum_j alpha_j dalpha_j)
    const double ds = tr.alpha[t] * (dalpha[t] - mean);
    const double* h = tr.hidden.row(t);
    k.axpy(ds, h, g.attn_u.data.data(), d);
    for (std::size_t j = 0; j < d; ++j) da[j] = ds * p.attn_u.data[j] * (1.0 - h[j] * h[j]);
    k.axpy(1.0, da.data(), g.attn_b.data.data(), d);
    k.ger(1.0, da.data(), e, g.attn_w.data.data(), d, d);
    k.gemv_t(p.attn_w.data.data(), da.data(), de, d, d);
  }
}

EncodeResult encode(const TokenSequence& x, const EncoderParams& p, Mode mode,
                    std::uint64_t rng_seed) {
  EncoderTrace tr = encoder_forward(x, p.embedding, p, mode, rng_seed);
  return {std::move(tr.w), std::move(tr.alpha)};
}

void save_attribution(const std::filesystem::path& path, std::span<const AttributionRow> rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write attribution file " + path.string());
  out << "doc_id\tencoder\ttoken\tweight\n";
  out << std::setprecision(9);
  for (const auto& r : rows) {
    out << r.doc_id << '\t' << r.encoder << '\t' << r.token << '\t' << r.weight << '\n';
  }
}

}  // namespace probation
