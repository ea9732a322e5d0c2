#include <set>
#include <sstream>

#include "doctest.h"
#include "probation/corpus.hpp"
#include "probation/encoding.hpp"
#include "probation/extraction.hpp"

using namespace probation;

namespace {

// Written out independently of the generator's own tables.
const std::set<int> kRemorse{1, 2, 3, 5, 7, 8, 9, 10, 11, 12, 14, 18};
const std::set<int> kRisk{6, 15, 16, 17, 23, 24, 26, 27, 28};

int oracle_score(const ElementVector& v) {
  int s = 0;
  for (int id = 1; id <= kNumElements; ++id) {
    if (v[id] == 0) continue;
    s += kRemorse.count(id) ? 1 : 0;
    s -= kRisk.count(id) ? 1 : 0;
  }
  return s;
}

SyntheticConfig config(std::size_t n, std::uint64_t seed) {
  SyntheticConfig c = default_synthetic_config();
  c.n_docs = n;
  c.seed = seed;
  if (n < 2000) c.rate_tolerance = 0.1;
  return c;
}

}  // namespace

TEST_CASE("default corpus hits the positive rate") {
  const SyntheticCorpus c = generate_synthetic_corpus(config(5000, 1));
  std::size_t pos = 0;
  for (const auto& d : c.docs) pos += *d.gold_main;
  const double rate = static_cast<double>(pos) / 5000.0;
  CHECK(rate >= 0.2669);
  CHECK(rate <= 0.3069);
  CHECK(c.realized_positive_rate == doctest::Approx(rate));
}

TEST_CASE("label dependency and separability") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const SyntheticCorpus c = generate_synthetic_corpus(config(2000, seed));
    REQUIRE(c.docs.size() == 2000);
    for (const auto& d : c.docs) {
      REQUIRE(d.gold_aux.has_value());
      REQUIRE(d.gold_main.has_value());
      REQUIRE(d.gold_elements.has_value());
      CHECK(*d.gold_main <= *d.gold_aux);
      const auto sev = find_severity(d.fact);
      REQUIRE(sev.has_value());
      const int aux = *sev != Severity::High ? 1 : 0;
      CHECK(*d.gold_aux == aux);
      CHECK(*d.gold_main == (aux == 1 && oracle_score(*d.gold_elements) >= c.threshold ? 1 : 0));
      CHECK(remorse_score(*d.gold_elements) == oracle_score(*d.gold_elements));
    }
  }
}

TEST_CASE("same seed gives byte-identical corpora") {
  std::ostringstream a, b, c;
  write_corpus(a, generate_synthetic_corpus(config(300, 9)).docs);
  write_corpus(b, generate_synthetic_corpus(config(300, 9)).docs);
  write_corpus(c, generate_synthetic_corpus(config(300, 10)).docs);
  CHECK(a.str() == b.str());
  CHECK(a.str() != c.str());
}

TEST_CASE("built-in rules recover the planted elements") {
  const SyntheticCorpus c = generate_synthetic_corpus(config(1000, 4));
  const CompiledRules rules = compile_rules(default_synthetic_rules(), canonical_registry());
  for (const auto& d : c.docs) CHECK(extract_elements(d.fact, rules) == *d.gold_elements);
}

TEST_CASE("trigger tokens do not collide") {
  std::vector<std::string> triggers;
  for (int id = 1; id <= kNumElements; ++id) {
    for (int v = 1; v <= element_arity(id); ++v) triggers.push_back(synthetic_trigger(id, v));
  }
  const SyntheticCorpus c = generate_synthetic_corpus(config(500, 5));
  std::set<std::string> surface;
  for (const auto& d : c.docs) {
    for (auto tok : split_whitespace(d.fact)) surface.emplace(tok);
  }
  for (const auto& t : triggers) {
    for (const auto& s : surface) {
      if (s == t || s.find(t) == std::string::npos) continue;
      // The only permitted superstring is the negated mention.
      CHECK(s == "NOT_" + t);
    }
  }
}

TEST_CASE("label noise only flips within the prerequisite") {
  SyntheticConfig cfg = config(2000, 6);
  cfg.label_noise = 0.2;
  const SyntheticCorpus c = generate_synthetic_corpus(cfg);
  std::size_t flipped = 0;
  for (const auto& d : c.docs) {
    CHECK(*d.gold_main <= *d.gold_aux);
    if (*d.gold_aux == 1) {
      flipped += *d.gold_main != (oracle_score(*d.gold_elements) >= c.threshold ? 1 : 0);
    }
  }
  CHECK(flipped > 0);
}

TEST_CASE("unreachable target is reported") {
  SyntheticConfig cfg = config(500, 1);
  cfg.positive_rate_target = 0.9;
  CHECK_THROWS_WITH_AS(generate_synthetic_corpus(cfg), doctest::Contains("achievable"),
                       std::invalid_argument);
  cfg.positive_rate_target = 1.5;
  CHECK_THROWS(validate(cfg));
}
