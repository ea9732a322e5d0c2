#pragma once
// Judgment documents, the line-record corpus format, 8:1:1 splitting and the
// planted-label synthetic corpus generator.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "probation/elements.hpp"

namespace probation {

struct DefendantMeta {
  int age_years = 0;
  bool pregnant = false;
  int sentence_months = 0;
  bool detention = false;

  friend bool operator==(const DefendantMeta&, const DefendantMeta&) = default;
};

struct JudgmentDocument {
  std::string id;
  std::string fact;
  // Task 1: sentence of three years or less, or detention.
  std::optional<int> gold_aux;
  // Task 2: probation granted. Implies gold_aux == 1.
  std::optional<int> gold_main;
  std::optional<DefendantMeta> meta;
  std::optional<ElementVector> gold_elements;

  friend bool operator==(const JudgmentDocument&, const JudgmentDocument&) = default;
};

class CorpusError : public std::runtime_error {
 public:
  CorpusError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " at line " + std::to_string(line)), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// One JSON object per line: {"id", "fact", "gold_aux", "gold_main", "meta",
// "gold_elements"}; the last three are optional.
std::vector<JudgmentDocument> load_corpus(const std::filesystem::path& path);
std::vector<JudgmentDocument> read_corpus(std::istream& in);
void write_corpus(std::ostream& out, std::span<const JudgmentDocument> docs);
void save_corpus(const std::filesystem::path& path, std::span<const JudgmentDocument> docs);
std::string to_record(const JudgmentDocument& doc);

struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

// train = round(0.8 N), val = ceil((N - train) / 2), test = rest.
SplitSizes split_sizes(std::size_t n);

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
  std::uint64_t seed = 0;

  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

DatasetSplit split_corpus(std::span<const JudgmentDocument> docs, std::uint64_t seed);
void save_split(const std::filesystem::path& path, const DatasetSplit& split);
DatasetSplit load_split(const std::filesystem::path& path);

struct CorpusStats {
  std::size_t n_docs = 0;
  std::size_t n_aux_labeled = 0;
  std::size_t n_main_labeled = 0;
  std::size_t n_aux_positive = 0;
  std::size_t n_main_positive = 0;
  double aux_rate = 0.0;   // over aux-labeled docs
  double main_rate = 0.0;  // over main-labeled docs
  // Fact length in whitespace tokens.
  std::size_t len_min = 0;
  std::size_t len_p50 = 0;
  std::size_t len_p90 = 0;
  std::size_t len_p99 = 0;
  std::size_t len_max = 0;
};

CorpusStats corpus_stats(std::span<const JudgmentDocument> docs);

// --- synthetic corpus -------------------------------------------------------

enum class Severity { Low, Mid, High };

struct ElementRates {
  // Activation probability of binary elements 1..31.
  std::array<double, kNumBinaryElements> binary{};
  // Elements 32 and 33: P(absent), P(value 1) .. P(value 5).
  std::array<std::array<double, kCategoricalArity + 1>, 2> categorical{};
};

struct SyntheticConfig {
  std::size_t n_docs = 2000;
  double positive_rate_target = 0.2869;
  // Largest accepted gap between the realized and target positive rate.
  double rate_tolerance = 0.02;
  ElementRates element_rates;
  double label_noise = 0.0;
  std::uint64_t seed = 0;
  // Fraction of documents rendered with SEV_LOW or SEV_MID (exact count).
  double prerequisite_rate = 0.5563;
  // Share of SEV_LOW among prerequisite-meeting documents.
  double low_share = 0.6;
  std::size_t filler_min = 12;
  std::size_t filler_max = 36;
  // Probability that an inactive negatable element is mentioned in negated form.
  double negated_mention_rate = 0.15;
};

SyntheticConfig default_synthetic_config();
void validate(const SyntheticConfig& cfg);

struct SyntheticCorpus {
  std::vector<JudgmentDocument> docs;
  // gold_main = gold_aux && remorse_score >= threshold (before label noise).
  int threshold = 0;
  double realized_positive_rate = 0.0;
};

SyntheticCorpus generate_synthetic_corpus(const SyntheticConfig& cfg);

// Surface vocabulary of the synthetic corpus.
std::string_view severity_token(Severity s);
std::optional<Severity> find_severity(std::string_view fact);
// Trigger token planted for element_id at the given value (1 for binary).
std::string synthetic_trigger(int element_id, int value = 1);
// Negated mention of a negatable binary element, e.g. "NOT_FORGIVEN".
std::string synthetic_negation(int element_id);
bool is_negatable(int element_id);
std::span<const int> remorse_elements();
std::span<const int> risk_elements();
int remorse_score(const ElementVector& v);

}  // namespace probation
