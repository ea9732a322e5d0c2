#pragma once
// Interpretation knowledge base and legal-sequence generation.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "probation/elements.hpp"
#include "probation/extraction.hpp"

namespace probation {

class InterpretationKB {
 public:
  static constexpr const char* kDefaultSeparator = "||";

  InterpretationKB() = default;
  // Checks coverage against the registry: exactly one non-empty entry per
  // registered (element, value) pair.
  InterpretationKB(std::map<std::pair<int, int>, std::string> entries, std::string separator,
                   const ElementRegistry& registry);

  const std::string& lookup(int element_id, int value) const;
  const std::string& separator() const { return separator_; }
  const std::map<std::pair<int, int>, std::string>& entries() const { return entries_; }

 private:
  std::map<std::pair<int, int>, std::string> entries_;
  std::string separator_ = kDefaultSeparator;
};

// Records {"element_id", "value", "interpretation"}; an optional record
// {"separator": "..."} overrides the separator token.
InterpretationKB load_kb(const std::filesystem::path& path, const ElementRegistry& registry);
void save_kb(const std::filesystem::path& path, const InterpretationKB& kb);

// Per-element token phrases for the synthetic corpus.
InterpretationKB default_synthetic_kb(const ElementRegistry& registry);

const std::string& lookup_interpretation(int element_id, int value, const InterpretationKB& kb);

struct LegalSequence {
  std::string doc_id;
  std::string text;
  std::vector<std::pair<int, int>> provenance;  // (element_id, value), ascending id

  friend bool operator==(const LegalSequence&, const LegalSequence&) = default;
};

LegalSequence generate_sequence(std::string doc_id, const ElementVector& v,
                                const InterpretationKB& kb);

void save_sequences(const std::filesystem::path& path, std::span<const LegalSequence> seqs);
std::vector<LegalSequence> load_sequences(const std::filesystem::path& path);

}  // namespace probation
