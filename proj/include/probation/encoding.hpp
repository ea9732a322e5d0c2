#pragma once
// Tokenization, vocabulary and the attention-pooled text encoder.
//
// encode():  e_t   = E[x_t]
//            s_t   = u . tanh(W e_t + b)          (non-PAD positions only)
//            alpha = softmax(s)
//            w     = P (sum_t alpha_t e_t)
// followed by inverted dropout on w in training mode.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "probation/corpus.hpp"
#include "probation/knowledge.hpp"
#include "probation/random.hpp"
#include "probation/tensor.hpp"

namespace probation {

using TokenId = std::int32_t;

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kSep = 2;
  static constexpr const char* kPadToken = "[PAD]";
  static constexpr const char* kUnkToken = "[UNK]";
  static constexpr const char* kSepToken = "[SEP]";

  Vocabulary();
  // Tokens in index order after the three reserved tokens.
  explicit Vocabulary(std::vector<std::string> tokens);

  TokenId index(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // "token<TAB>index" per line.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Whitespace tokens of the training facts and sequences; ordering is
// frequency descending then lexicographic.
Vocabulary build_vocab(std::span<const JudgmentDocument> train_docs,
                       std::span<const LegalSequence> train_seqs, std::size_t min_freq = 1);
Vocabulary build_vocab_from_texts(std::span<const std::string_view> texts, std::size_t min_freq = 1);

std::vector<std::string_view> split_whitespace(std::string_view text);

inline constexpr std::size_t kDefaultMaxLen = 512;

struct TokenSequence {
  // Exactly max_len ids; positions [length, max_len) hold PAD.
  std::vector<TokenId> ids;
  std::size_t length = 0;
  // Surface form of each non-PAD position.
  std::vector<std::string> surface;

  bool encodable() const { return length > 0; }
  std::span<const TokenId> tokens() const { return {ids.data(), length}; }
};

TokenSequence tokenize(std::string_view text, const Vocabulary& vocab,
                       std::size_t max_len = kDefaultMaxLen);

// [F] SEP [Q], truncating the tail of F first so Q survives whole when it fits.
TokenSequence concat_inputs(const TokenSequence& f, const TokenSequence& q,
                            std::size_t max_len = kDefaultMaxLen);

struct EncoderParams {
  Tensor embedding;   // |V| x d; empty when borrowed from another encoder
  Tensor attn_w;      // d x d
  Tensor attn_b;      // 1 x d
  Tensor attn_u;      // 1 x d
  Tensor projection;  // d x d
  double dropout_rate = 0.3;

  std::size_t dim() const { return attn_w.rows; }
  void check() const;
};

EncoderParams init_encoder(std::size_t vocab_size, std::size_t dim, double dropout_rate, Rng& rng,
                           double scale = 0.05, bool with_embedding = true);
EncoderParams zeros_like(const EncoderParams& p);

enum class Mode { Train, Infer };

struct EncoderTrace {
  std::vector<TokenId> ids;    // non-PAD tokens
  Tensor hidden;               // n x d, tanh(W e_t + b)
  std::vector<double> alpha;   // n
  std::vector<double> pooled;  // d
  std::vector<double> dropout; // d multipliers (0 or 1/(1-r)); empty in infer mode
  std::vector<double> w;       // d, after dropout
};

EncoderTrace encoder_forward(const TokenSequence& x, const Tensor& embedding,
                             const EncoderParams& p, Mode mode, std::uint64_t dropout_seed);

// Accumulates d(loss)/d(params) given d(loss)/d(w) into grads and
// embedding_grad (which may alias grads.embedding).
void encoder_backward(const EncoderTrace& trace, std::span<const double> dw,
                      const Tensor& embedding, const EncoderParams& p, EncoderParams& grads,
                      Tensor& embedding_grad);

struct EncodeResult {
  std::vector<double> w;
  std::vector<double> alpha;  // one weight per non-PAD position
};

EncodeResult encode(const TokenSequence& x, const EncoderParams& p, Mode mode,
                    std::uint64_t rng_seed = 0);

struct AttributionRow {
  std::string doc_id;
  std::string encoder;
  std::string token;
  double weight;
};

// Tab-separated: doc_id, encoder, token, weight.
void save_attribution(const std::filesystem::path& path, std::span<const AttributionRow> rows);

}  // namespace probation
