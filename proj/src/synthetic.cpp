#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "probation/corpus.hpp"
#include "probation/random.hpp"

namespace probation {
namespace {

constexpr std::array<std::string_view, kNumBinaryElements> kBinaryTriggers = {
    "VICTIM_AT_FAULT",   // 1
    "EXCESSIVE_DEFENSE", // 2
    "COERCED",           // 3
    "FAMILY_DISPUTE",    // 4
    "MINOR_ROLE",        // 5
    "ARMED",             // 6
    "COMPENSATED",       // 7
    "FORGIVEN",          // 8
    "CONFESSED",         // 9
    "SURRENDERED",       // 10
    "PLEADED_GUILTY",    // 11
    "APOLOGIZED",        // 12
    "RESTITUTION",       // 13
    "MERITORIOUS",       // 14
    "RECIDIVIST",        // 15
    "PRIOR_RECORD",      // 16
    "DRUG_USER",         // 17
    "FIRST_OFFENDER",    // 18
    "EMPLOYED",          // 19
    "FAMILY_SUPPORT",    // 20
    "LOCAL_RESIDENT",    // 21
    "CARETAKER",         // 22
    "FLED_SCENE",        // 23
    "GANG_LINKED",       // 24
    "PUBLIC_PLACE",      // 25
    "MULTIPLE_VICTIMS",  // 26
    "VULNERABLE_VICTIM", // 27
    "PREMEDITATED",      // 28
    "BRAWL",             // 29
    "COMMUNITY_VOUCHED", // 30
    "DAMAGE_REPAIRED",   // 31
};

constexpr std::array<std::string_view, 2> kCategoricalTriggers = {"INJURY_GRADE_", "COMP_LEVEL_"};

constexpr std::array<int, 12> kRemorse = {1, 2, 3, 5, 7, 8, 9, 10, 11, 12, 14, 18};
constexpr std::array<int, 9> kRisk = {6, 15, 16, 17, 23, 24, 26, 27, 28};
constexpr std::array<int, 6> kNegatable = {7, 8, 9, 10, 11, 12};

constexpr std::size_t kFillerVocab = 240;

std::string filler_token(std::uint64_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "W%03u", static_cast<unsigned>(i));
  return buf;
}

int sample_categorical(Rng& rng, const std::array<double, kCategoricalArity + 1>& probs) {
  double u = rng.uniform();
  for (int v = 0; v <= kCategoricalArity; ++v) {
    u -= probs[static_cast<std::size_t>(v)];
    if (u < 0.0) return v;
  }
  return kCategoricalArity;
}

double rate_at(const std::vector<int>& scores, const std::vector<int>& aux, int threshold) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) pos += aux[i] == 1 && scores[i] >= threshold;
  return double(pos) / double(scores.size());
}

}  // namespace

std::string_view severity_token(Severity s) {
  switch (s) {
    case Severity::Low: return "SEV_LOW";
    case Severity::Mid: return "SEV_MID";
    case Severity::High: return "SEV_HIGH";
  }
  return {};
}

std::optional<Severity> find_severity(std::string_view fact) {
  std::optional<Severity> found;
  for (Severity s : {Severity::Low, Severity::Mid, Severity::High}) {
    if (fact.find(severity_token(s)) != std::string_view::npos) {
      if (found) return std::nullopt;  // ambiguous
      found = s;
    }
  }
  return found;
}

std::string synthetic_trigger(int element_id, int value) {
  if (element_id < 1 || element_id > kNumElements || value < 1 ||
      value > element_arity(element_id)) {
    throw std::out_of_range("no trigger for element " + std::to_string(element_id) + " value " +
                            std::to_string(value));
  }
  if (is_categorical(element_id)) {
    return std::string(kCategoricalTriggers[static_cast<std::size_t>(element_id - 32)]) +
           std::to_string(value);
  }
  return std::string(kBinaryTriggers[static_cast<std::size_t>(element_id - 1)]);
}

bool is_negatable(int element_id) {
  return std::find(kNegatable.begin(), kNegatable.end(), element_id) != kNegatable.end();
}

std::string synthetic_negation(int element_id) {
  if (!is_negatable(element_id)) {
    throw std::out_of_range("element " + std::to_string(element_id) + " has no negated form");
  }
  return "NOT_" + synthetic_trigger(element_id);
}

std::span<const int> remorse_elements() { return kRemorse; }
std::span<const int> risk_elements() { return kRisk; }

int remorse_score(const ElementVector& v) {
  int s = 0;
  for (int k : kRemorse) s += v[k] != 0;
  for (int k : kRisk) s -= v[k] != 0;
  return s;
}

SyntheticConfig default_synthetic_config() {
  SyntheticConfig cfg;
  // Rates chosen so that P(score >= 3) ~= 0.5157; with prerequisite_rate
  // 0.5563 the expected positive rate is 0.2869.
  cfg.element_rates.binary = {
      0.20, 0.08, 0.06, 0.15, 0.12, 0.30, 0.45, 0.40, 0.55, 0.30, 0.60,
      0.35, 0.10, 0.05, 0.10, 0.18, 0.06, 0.50, 0.40, 0.30, 0.50, 0.10,
      0.12, 0.04, 0.30, 0.10, 0.08, 0.12, 0.20, 0.08, 0.10,
  };
  cfg.element_rates.categorical = {{
      {0.10, 0.35, 0.25, 0.15, 0.10, 0.05},
      {0.50, 0.15, 0.12, 0.10, 0.08, 0.05},
  }};
  return cfg;
}

void validate(const SyntheticConfig& cfg) {
  auto bad = [](const std::string& msg) { throw std::invalid_argument("synthetic config: " + msg); };
  if (cfg.n_docs == 0) bad("n_docs must be positive");
  if (!(cfg.positive_rate_target > 0.0 && cfg.positive_rate_target < 1.0)) {
    bad("positive_rate_target must be in (0,1)");
  }
  if (!(cfg.rate_tolerance >= 0.0)) bad("rate_tolerance must be non-negative");
  if (!(cfg.label_noise >= 0.0 && cfg.label_noise < 1.0)) bad("label_noise must be in [0,1)");
  if (!(cfg.prerequisite_rate > 0.0 && cfg.prerequisite_rate <= 1.0)) {
    bad("prerequisite_rate must be in (0,1]");
  }
  if (!(cfg.low_share >= 0.0 && cfg.low_share <= 1.0)) bad("low_share must be in [0,1]");
  if (!(cfg.negated_mention_rate >= 0.0 && cfg.negated_mention_rate <= 1.0)) {
    bad("negated_mention_rate must be in [0,1]");
  }
  if (cfg.filler_min > cfg.filler_max) bad("filler_min > filler_max");
  for (std::size_t i = 0; i < cfg.element_rates.binary.size(); ++i) {
    double p = cfg.element_rates.binary[i];
    if (!(p >= 0.0 && p <= 1.0)) bad("rate of element " + std::to_string(i + 1) + " not in [0,1]");
  }
  for (std::size_t c = 0; c < 2; ++c) {
    double sum = 0.0;
    for (double p : cfg.element_rates.categorical[c]) {
      if (!(p >= 0.0 && p <= 1.0)) bad("categorical probability not in [0,1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      bad("categorical distribution of element " + std::to_string(32 + c) + " sums to " +
          std::to_string(sum));
    }
  }
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticConfig& cfg) {
  validate(cfg);
  const std::size_t n = cfg.n_docs;

  // Elements first, from one stream; severity from another so the element
  // draws do not depend on the prerequisite rate.
  Rng element_rng(derive_seed(cfg.seed, 1));
  std::vector<ElementVector> vectors(n);
  for (auto& v : vectors) {
    for (int k = 1; k <= kNumBinaryElements; ++k) {
      if (element_rng.bernoulli(cfg.element_rates.binary[static_cast<std::size_t>(k - 1)])) {
        v.set(k, 1);
      }
    }
    for (int k = 32; k <= kNumElements; ++k) {
      v.set(k, sample_categorical(element_rng, cfg.element_rates.categorical[std::size_t(k - 32)]));
    }
  }

  // Exact-count severity assignment.
  const auto n_aux = static_cast<std::size_t>(std::llround(cfg.prerequisite_rate * double(n)));
  const auto n_low = static_cast<std::size_t>(std::llround(cfg.low_share * double(n_aux)));
  std::vector<Severity> severity(n, Severity::High);
  for (std::size_t i = 0; i < n_aux; ++i) severity[i] = i < n_low ? Severity::Low : Severity::Mid;
  Rng severity_rng(derive_seed(cfg.seed, 2));
  severity_rng.shuffle(std::span<Severity>(severity));

  std::vector<int> scores(n), aux(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = remorse_score(vectors[i]);
    aux[i] = severity[i] != Severity::High;
  }

  // rate(t) is non-increasing in t. Bisect for the smallest t with
  // rate(t) <= target, then compare against t - 1.
  int lo = *std::min_element(scores.begin(), scores.end());
  int hi = *std::max_element(scores.begin(), scores.end()) + 1;
  const double max_rate = rate_at(scores, aux, lo);
  const double target = cfg.positive_rate_target;
  int threshold;
  if (max_rate <= target) {
    threshold = lo;
  } else {
    int a = lo, b = hi;  // rate(a) > target >= rate(b) == 0
    while (b - a > 1) {
      int mid = a + (b - a) / 2;
      (rate_at(scores, aux, mid) <= target ? b : a) = mid;
    }
    const double below = rate_at(scores, aux, b);
    const double above = rate_at(scores, aux, a);
    threshold = (above - target < target - below) ? a : b;
  }
  const double realized = rate_at(scores, aux, threshold);
  if (std::abs(realized - target) > cfg.rate_tolerance) {
    std::ostringstream msg;
    msg << "positive rate target " << target << " unreachable: integer thresholds give rates in ["
        << 0.0 << ", " << max_rate << "], nearest achievable " << realized << " (threshold "
        << threshold << ")";
    throw std::invalid_argument(msg.str());
  }

  Rng text_rng(derive_seed(cfg.seed, 3));
  Rng meta_rng(derive_seed(cfg.seed, 4));
  Rng noise_rng(derive_seed(cfg.seed, 5));
  const int width = std::max(4, int(std::to_string(n).size()));

  SyntheticCorpus out;
  out.threshold = threshold;
  out.docs.reserve(n);
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const ElementVector& v = vectors[i];
    std::vector<std::string> tokens;
    tokens.emplace_back(severity_token(severity[i]));
    for (int k = 1; k <= kNumElements; ++k) {
      if (v[k] != 0) {
        tokens.push_back(synthetic_trigger(k, v[k]));
      } else if (is_negatable(k) && text_rng.bernoulli(cfg.negated_mention_rate)) {
        tokens.push_back(synthetic_negation(k));
      }
    }
    const std::size_t n_filler =
        cfg.filler_min + text_rng.below(cfg.filler_max - cfg.filler_min + 1);
    for (std::size_t f = 0; f < n_filler; ++f) tokens.push_back(filler_token(text_rng.below(kFillerVocab)));
    text_rng.shuffle(std::span<std::string>(tokens));

    JudgmentDocument doc;
    char id[32];
    std::snprintf(id, sizeof id, "syn-%0*zu", width, i);
    doc.id = id;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (t) doc.fact += ' ';
      doc.fact += tokens[t];
    }
    doc.gold_aux = aux[i];
    int main = aux[i] == 1 && scores[i] >= threshold;
    // Noise only among prerequisite-meeting documents so gold_main <= gold_aux holds.
    if (cfg.label_noise > 0.0 && aux[i] == 1 && noise_rng.bernoulli(cfg.label_noise)) main ^= 1;
    doc.gold_main = main;
    positives += main;

    DefendantMeta meta;
    meta.age_years = 18 + int(meta_rng.below(58));  // 18..75: never triggers the mandatory rule
    switch (severity[i]) {
      case Severity::Low:
        meta.detention = meta_rng.bernoulli(0.5);
        meta.sentence_months = meta.detention ? 1 + int(meta_rng.below(6)) : 6 + int(meta_rng.below(7));
        break;
      case Severity::Mid: meta.sentence_months = 13 + int(meta_rng.below(24)); break;
      case Severity::High: meta.sentence_months = 37 + int(meta_rng.below(84)); break;
    }
    doc.meta = meta;
    doc.gold_elements = v;
    out.docs.push_back(std::move(doc));
  }
  out.realized_positive_rate = double(positives) / double(n);
  return out;
}

}  // namespace probation
