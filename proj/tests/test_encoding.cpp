#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "probation/encoding.hpp"
#include "probation/gradcheck.hpp"
#include "probation/random.hpp"

using namespace probation;

namespace {

Vocabulary vocab_of(std::initializer_list<std::string_view> texts, std::size_t min_freq = 1) {
  std::vector<std::string_view> v(texts);
  return build_vocab_from_texts(v, min_freq);
}

std::string words(std::size_t n, const std::string& w = "A") {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + w;
  return s;
}

EncoderParams params(std::size_t vocab, std::size_t dim, std::uint64_t seed, double scale = 0.5) {
  Rng rng(seed);
  EncoderParams p = init_encoder(vocab, dim, 0.3, rng, scale);
  for (double& b : p.attn_b.data) b = rng.uniform(-0.2, 0.2);
  return p;
}

TokenSequence ids(std::vector<TokenId> tokens, std::size_t max_len = 8) {
  TokenSequence s;
  s.length = tokens.size();
  s.ids = tokens;
  s.ids.resize(max_len, Vocabulary::kPad);
  for (TokenId t : tokens) s.surface.push_back("t" + std::to_string(t));
  return s;
}

double norm(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

}  // namespace

TEST_CASE("vocabulary") {
  const Vocabulary v = vocab_of({"A A B"});
  CHECK(v.tokens() == std::vector<std::string>{"[PAD]", "[UNK]", "[SEP]", "A", "B"});
  CHECK(v.index("A") == 3);
  CHECK(v.index("Z") == Vocabulary::kUnk);

  const Vocabulary v2 = vocab_of({"A A B"}, 2);
  CHECK(v2.size() == 4);
  CHECK(v2.index("B") == Vocabulary::kUnk);

  CHECK(vocab_of({"C B A", "B C"}) == vocab_of({"C B A", "B C"}));
  // Frequency first, then lexicographic.
  CHECK(vocab_of({"C B A", "B C"}).tokens()[3] == "B");
  CHECK(vocab_of({"C B A", "B C"}).tokens()[5] == "A");

  CHECK_THROWS(build_vocab({}, {}, 1));

  const auto path = std::filesystem::temp_directory_path() / "probation_vocab_test.tsv";
  v.save(path);
  CHECK(Vocabulary::load(path) == v);
  std::filesystem::remove(path);
}

TEST_CASE("tokenize") {
  const Vocabulary v = vocab_of({"A B"});
  const TokenSequence empty = tokenize("", v, 4);
  CHECK_FALSE(empty.encodable());
  CHECK(empty.ids == std::vector<TokenId>(4, Vocabulary::kPad));

  const TokenSequence ab = tokenize("A B", v, 4);
  CHECK(ab.ids == std::vector<TokenId>{v.index("A"), v.index("B"), Vocabulary::kPad, Vocabulary::kPad});
  CHECK(ab.length == 2);
  CHECK(tokenize("  A \t X  ", v, 4).ids[1] == Vocabulary::kUnk);

  const TokenSequence long_seq = tokenize(words(600), v, 512);
  CHECK(long_seq.length == 512);
  CHECK(long_seq.ids.size() == 512);
}

TEST_CASE("concat_inputs") {
  const Vocabulary v = vocab_of({"A Q"});
  const TokenSequence f = tokenize(words(3), v, 512);
  const TokenSequence none = tokenize("", v, 512);
  const TokenSequence fq = concat_inputs(f, none, 512);
  CHECK(fq.length == 4);
  CHECK(fq.ids[3] == Vocabulary::kSep);

  const TokenSequence f300 = tokenize(words(300), v, 512), q100 = tokenize(words(100, "Q"), v, 512);
  const TokenSequence a = concat_inputs(f300, q100, 512);
  CHECK(a.length == 401);
  CHECK(a.ids[300] == Vocabulary::kSep);
  CHECK(a.ids[401] == Vocabulary::kPad);

  const TokenSequence f500 = tokenize(words(500), v, 512);
  const TokenSequence b = concat_inputs(f500, q100, 512);
  CHECK(b.length == 512);
  CHECK(b.ids[410] == v.index("A"));
  CHECK(b.ids[411] == Vocabulary::kSep);
  CHECK(std::count(b.ids.begin(), b.ids.end(), v.index("Q")) == 100);
  CHECK(b.surface.size() == 512);

  // Q longer than the budget keeps its head.
  const TokenSequence q600 = tokenize(words(600, "Q"), v, 600);
  const TokenSequence c = concat_inputs(f300, q600, 512);
  CHECK(c.length == 512);
  CHECK(c.ids[0] == Vocabulary::kSep);
}

TEST_CASE("encode examples") {
  const EncoderParams p = params(6, 4, 1);
  const EncodeResult one = encode(ids({3}), p, Mode::Infer);
  REQUIRE(one.alpha.size() == 1);
  CHECK(one.alpha[0] == 1.0);
  for (std::size_t i = 0; i < 4; ++i) {
    double e = 0.0;
    for (std::size_t j = 0; j < 4; ++j) e += p.projection(i, j) * p.embedding(3, j);
    CHECK(one.w[i] == doctest::Approx(e).epsilon(1e-12));
  }
  const EncodeResult two = encode(ids({3, 3}), p, Mode::Infer);
  CHECK(two.alpha == std::vector<double>{0.5, 0.5});
  for (std::size_t i = 0; i < 4; ++i) CHECK(two.w[i] == doctest::Approx(one.w[i]).epsilon(1e-12));

  CHECK_THROWS(encode(ids({}), p, Mode::Infer));
}

TEST_CASE("attention is a distribution and pooling is order-free") {
  const EncoderParams p = params(12, 5, 2);
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TokenId> toks(1 + rng.below(10));
    for (auto& t : toks) t = static_cast<TokenId>(1 + rng.below(11));
    const EncodeResult r = encode(ids(toks, 16), p, Mode::Infer);
    REQUIRE(r.alpha.size() == toks.size());
    CHECK(std::accumulate(r.alpha.begin(), r.alpha.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    for (double a : r.alpha) CHECK(a >= 0.0);

    std::vector<std::size_t> perm(toks.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(perm));
    std::vector<TokenId> shuffled;
    for (std::size_t i : perm) shuffled.push_back(toks[i]);
    const EncodeResult s = encode(ids(shuffled, 16), p, Mode::Infer);
    for (std::size_t i = 0; i < perm.size(); ++i) CHECK(s.alpha[i] == doctest::Approx(r.alpha[perm[i]]).epsilon(1e-12));
    for (std::size_t i = 0; i < r.w.size(); ++i) CHECK(s.w[i] == doctest::Approx(r.w[i]).epsilon(1e-12));
  }
}

TEST_CASE("dropout") {
  const EncoderParams p = params(8, 6, 4);
  const TokenSequence x = ids({2, 5, 7, 5});
  const EncodeResult infer = encode(x, p, Mode::Infer);
  CHECK(encode(x, p, Mode::Infer).w == infer.w);
  CHECK(encode(x, p, Mode::Train, 9).w == encode(x, p, Mode::Train, 9).w);

  std::vector<double> mean(infer.w.size(), 0.0);
  const int samples = 10000;
  for (int s = 0; s < samples; ++s) {
    const EncodeResult t = encode(x, p, Mode::Train, static_cast<std::uint64_t>(s));
    for (std::size_t i = 0; i < mean.size(); ++i) {
      // Each coordinate is either dropped or scaled by 1 / (1 - rate).
      CHECK((t.w[i] == 0.0 || std::abs(t.w[i] - infer.w[i] / 0.7) < 1e-12));
      mean[i] += t.w[i] / samples;
    }
  }
  std::vector<double> diff(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) diff[i] = mean[i] - infer.w[i];
  CHECK(norm(diff) <= 0.02 * norm(infer.w));
}

TEST_CASE("parameter checks") {
  Rng rng(1);
  CHECK_THROWS(init_encoder(5, 1, 0.3, rng));
  CHECK_THROWS(init_encoder(5, 4, 1.0, rng));
  EncoderParams p = params(5, 4, 1);
  p.attn_u.data[0] = std::nan("");
  CHECK_THROWS(p.check());
  const EncoderParams d = init_encoder(5, 4, 0.3, rng);
  for (double x : d.embedding.data) CHECK(std::abs(x) <= 0.05);
  for (double x : d.attn_b.data) CHECK(x == 0.0);
}

TEST_CASE("analytic gradients match finite differences") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const GradCheckReport r = gradient_check(seed);
    CHECK(r.groups.size() == 18);
    for (const auto& g : r.groups) {
      INFO(g.name);
      CHECK(g.max_rel_error <= kGradCheckTolerance);
    }
  }
}

TEST_CASE("attribution file") {
  const auto path = std::filesystem::temp_directory_path() / "probation_attr_test.tsv";
  std::vector<AttributionRow> rows{{"d1", "main", "A", 0.75}, {"d1", "main", "B", 0.25}};
  save_attribution(path, rows);
  std::ifstream in(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  CHECK(n == 3);
  std::filesystem::remove(path);
}
