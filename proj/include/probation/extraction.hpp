#pragma once
// Rule-based extraction of probation legal elements from fact text.
//
// A rule names an element (and value, for the two categorical elements), a set
// of positive patterns and a set of negation patterns. Patterns are
// case-sensitive exact substrings. A rule fires when any positive pattern
// occurs in the fact and none of its own negation patterns does.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "probation/corpus.hpp"
#include "probation/elements.hpp"

namespace probation {

enum class ElementKind { Binary, Categorical };

// Art. 72 substantive conditions.
enum class Condition {
  MildCircumstances,  // (a)
  Remorse,            // (b)
  NoReoffendingRisk,  // (c)
  NoCommunityImpact,  // (d)
};

struct ElementDef {
  int id = 0;
  std::string name;
  ElementKind kind = ElementKind::Binary;
  int values = 1;  // 1 for binary, 5 for categorical
  Condition condition = Condition::MildCircumstances;
};

struct ElementRegistry {
  std::vector<ElementDef> elements;

  const ElementDef* find(int id) const;
};

ElementRegistry canonical_registry();
// Empty when the registry satisfies every invariant.
std::vector<std::string> validate_registry(const ElementRegistry& registry);

// One JSON object per line: {"id", "name", "kind", "values", "condition"}.
ElementRegistry load_registry(const std::filesystem::path& path);
void save_registry(const std::filesystem::path& path, const ElementRegistry& registry);

char condition_code(Condition c);
Condition parse_condition(std::string_view code);

struct ExtractionRule {
  int element_id = 0;
  int value = 1;
  std::vector<std::string> positive_patterns;
  std::vector<std::string> negation_patterns;
  int priority = 0;
};

// One JSON object per line: {"element_id", "value", "positive_patterns",
// "negation_patterns", "priority"}.
std::vector<ExtractionRule> read_rules(std::istream& in);
std::vector<ExtractionRule> load_rules(const std::filesystem::path& path);
void save_rules(const std::filesystem::path& path, std::span<const ExtractionRule> rules);

// Rules matching the trigger tokens planted by generate_synthetic_corpus.
std::vector<ExtractionRule> default_synthetic_rules();

// Immutable multi-pattern matcher; all patterns are found in one pass over
// the fact with an Aho-Corasick automaton.
class CompiledRules {
 public:
  CompiledRules(std::span<const ExtractionRule> rules, const ElementRegistry& registry);

  ElementVector extract(std::string_view fact) const;

  std::size_t rule_count() const { return rules_.size(); }
  std::size_t pattern_count() const { return patterns_.size(); }

 private:
  struct Node {
    std::vector<std::pair<unsigned char, std::int32_t>> next;  // sorted by byte
    std::int32_t fail = 0;
    std::int32_t dict_link = -1;  // nearest suffix node that ends a pattern
    std::int32_t pattern = -1;
  };
  std::int32_t child(std::int32_t node, unsigned char c) const;
  std::int32_t add_pattern(const std::string& pattern);
  void build_links();

  std::vector<ExtractionRule> rules_;
  std::vector<std::string> patterns_;
  // Pattern ids per rule.
  std::vector<std::vector<std::int32_t>> positive_;
  std::vector<std::vector<std::int32_t>> negation_;
  std::vector<Node> nodes_;
};

CompiledRules compile_rules(const std::filesystem::path& rules_file,
                            const ElementRegistry& registry);
CompiledRules compile_rules(std::span<const ExtractionRule> rules, const ElementRegistry& registry);

ElementVector extract_elements(std::string_view fact, const CompiledRules& rules);

struct ExtractedVector {
  std::string id;
  ElementVector elements;
};

std::vector<ExtractedVector> batch_extract(std::span<const JudgmentDocument> docs,
                                           const CompiledRules& rules);

// {"id", "elements": [33 ints]} per line.
void save_vectors(const std::filesystem::path& path, std::span<const ExtractedVector> vectors);
std::vector<ExtractedVector> load_vectors(const std::filesystem::path& path);

}  // namespace probation
