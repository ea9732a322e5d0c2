#include <algorithm>
#include <deque>
#include <fstream>
#include <map>

#include "json.hpp"
#include "probation/extraction.hpp"

namespace probation {

using nlohmann::json;

std::vector<ExtractionRule> read_rules(std::istream& in) {
  std::vector<ExtractionRule> rules;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j = json::parse(text);
      ExtractionRule r;
      r.element_id = j.at("element_id").get<int>();
      r.value = j.value("value", 1);
      r.positive_patterns = j.at("positive_patterns").get<std::vector<std::string>>();
      r.negation_patterns = j.value("negation_patterns", std::vector<std::string>{});
      r.priority = j.value("priority", 0);
      rules.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw std::runtime_error("malformed rule at line " + std::to_string(line) + ": " + e.what());
    }
  }
  return rules;
}

std::vector<ExtractionRule> load_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open rules file " + path.string());
  return read_rules(in);
}

void save_rules(const std::filesystem::path& path, std::span<const ExtractionRule> rules) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write rules file " + path.string());
  for (const auto& r : rules) {
    json j{{"element_id", r.element_id},
           {"value", r.value},
           {"positive_patterns", r.positive_patterns},
           {"negation_patterns", r.negation_patterns},
           {"priority", r.priority}};
    out << j.dump() << '\n';
  }
}

std::vector<ExtractionRule> default_synthetic_rules() {
  std::vector<ExtractionRule> rules;
  for (int k = 1; k <= kNumElements; ++k) {
    for (int v = 1; v <= element_arity(k); ++v) {
      ExtractionRule r;
      r.element_id = k;
      r.value = v;
      r.positive_patterns = {synthetic_trigger(k, v)};
      if (is_negatable(k)) r.negation_patterns = {synthetic_negation(k)};
      rules.push_back(std::move(r));
    }
  }
  return rules;
}

// --- compiled matcher -------------------------------------------------------

CompiledRules::CompiledRules(std::span<const ExtractionRule> rules,
                             const ElementRegistry& registry) {
  nodes_.emplace_back();
  std::map<std::string, std::int32_t, std::less<>> ids;
  auto intern = [&](const std::string& pattern) {
    auto it = ids.find(pattern);
    if (it != ids.end()) return it->second;
    std::int32_t id = add_pattern(pattern);
    ids.emplace(pattern, id);
    return id;
  };

  for (const auto& r : rules) {
    const ElementDef* def = registry.find(r.element_id);
    if (def == nullptr) {
      throw std::invalid_argument("unknown element " + std::to_string(r.element_id));
    }
    if (r.value < 1 || r.value > def->values) {
      throw std::invalid_argument("value " + std::to_string(r.value) + " out of arity for element " +
                                  std::to_string(r.element_id));
    }
    if (r.positive_patterns.empty()) {
      throw std::invalid_argument("rule for element " + std::to_string(r.element_id) +
                                  " has no positive pattern");
    }
    std::vector<std::int32_t> pos, neg;
    for (const auto& p : r.positive_patterns) {
      if (p.empty()) {
        throw std::invalid_argument("empty pattern in rule for element " +
                                    std::to_string(r.element_id));
      }
      pos.push_back(intern(p));
    }
    for (const auto& p : r.negation_patterns) {
      if (p.empty()) {
        throw std::invalid_argument("empty pattern in rule for element " +
                                    std::to_string(r.element_id));
      }
      neg.push_back(intern(p));
    }
    rules_.push_back(r);
    positive_.push_back(std::move(pos));
    negation_.push_back(std::move(neg));
  }
  build_links();
}

std::int32_t CompiledRules::child(std::int32_t node, unsigned char c) const {
  const auto& next = nodes_[static_cast<std::size_t>(node)].next;
  auto it = std::lower_bound(next.begin(), next.end(), c,
                             [](const auto& edge, unsigned char key) { return edge.first < key; });
  return (it != next.end() && it->first == c) ? it->second : -1;
}

std::int32_t CompiledRules::add_pattern(const std::string& pattern) {
  std::int32_t node = 0;
  for (unsigned char c : pattern) {
    std::int32_t next = child(node, c);
    if (next < 0) {
      next = static_cast<std::int32_t>(nodes_.size());
      nodes_.emplace_back();
      auto& edges = nodes_[static_cast<std::size_t>(node)].next;
      auto it = std::lower_bound(edges.begin(), edges.end(), c,
                                 [](const auto& e, unsigned char key) { return e.first < key; });
      edges.insert(it, {c, next});
    }
    node = next;
  }
  const auto id = static_cast<std::int32_t>(patterns_.size());
  patterns_.push_back(pattern);
  nodes_[static_cast<std::size_t>(node)].pattern = id;
  return id;
}

void CompiledRules::build_links() {
  std::deque<std::int32_t> queue;
  for (const auto& [c, v] : nodes_[0].next) {
    nodes_[static_cast<std::size_t>(v)].fail = 0;
    queue.push_back(v);
  }
  while (!queue.empty()) {
    const std::int32_t u = queue.front();
    queue.pop_front();
    for (const auto& [c, v] : nodes_[static_cast<std::size_t>(u)].next) {
      std::int32_t f = nodes_[static_cast<std::size_t>(u)].fail;
      while (f != 0 && child(f, c) < 0) f = nodes_[static_cast<std::size_t>(f)].fail;
      std::int32_t target = child(f, c);
      if (target < 0 || target == v) target = 0;
      Node& node = nodes_[static_cast<std::size_t>(v)];
      node.fail = target;
      const Node& fail_node = nodes_[static_cast<std::size_t>(target)];
      node.dict_link = fail_node.pattern >= 0 ? target : fail_node.dict_link;
      queue.push_back(v);
    }
  }
}

ElementVector CompiledRules::extract(std::string_view fact) const {
  std::vector<char> hit(patterns_.size(), 0);
  std::int32_t state = 0;
  for (unsigned char c : fact) {
    std::int32_t next;
    while ((next = child(state, c)) < 0 && state != 0) {
      state = nodes_[static_cast<std::size_t>(state)].fail;
    }
    state = next < 0 ? 0 : next;
    for (std::int32_t n = state; n > 0;) {
      const Node& node = nodes_[static_cast<std::size_t>(n)];
      if (node.pattern >= 0) hit[static_cast<std::size_t>(node.pattern)] = 1;
      n = node.dict_link;
    }
  }

  ElementVector out;
  // Best (priority, value) per categorical slot.
  std::array<std::pair<int, int>, kNumElements + 1> best{};
  std::array<bool, kNumElements + 1> any{};
  auto matched = [&](const std::vector<std::int32_t>& ids) {
    return std::any_of(ids.begin(), ids.end(),
                       [&](std::int32_t id) { return hit[static_cast<std::size_t>(id)] != 0; });
  };
  for (std::size_t r = 0; r < rules_.size(); ++r) {
    if (!matched(positive_[r]) || matched(negation_[r])) continue;
    const ExtractionRule& rule = rules_[r];
    const auto k = static_cast<std::size_t>(rule.element_id);
    std::pair<int, int> candidate{rule.priority, rule.value};
    if (!any[k] || candidate > best[k]) best[k] = candidate;
    any[k] = true;
  }
  for (int k = 1; k <= kNumElements; ++k) {
    if (any[static_cast<std::size_t>(k)]) {
      out.set(k, is_categorical(k) ? best[static_cast<std::size_t>(k)].second : 1);
    }
  }
  return out;
}

CompiledRules compile_rules(std::span<const ExtractionRule> rules,
                            const ElementRegistry& registry) {
  return CompiledRules(rules, registry);
}

CompiledRules compile_rules(const std::filesystem::path& rules_file,
                            const ElementRegistry& registry) {
  const auto rules = load_rules(rules_file);
  return CompiledRules(rules, registry);
}

ElementVector extract_elements(std::string_view fact, const CompiledRules& rules) {
  return rules.extract(fact);
}

std::vector<ExtractedVector> batch_extract(std::span<const JudgmentDocument> docs,
                                           const CompiledRules& rules) {
  std::vector<ExtractedVector> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) out.push_back({doc.id, rules.extract(doc.fact)});
  return out;
}

void save_vectors(const std::filesystem::path& path, std::span<const ExtractedVector> vectors) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vectors file " + path.string());
  for (const auto& v : vectors) {
    json slots = json::array();
    for (int k = 1; k <= kNumElements; ++k) slots.push_back(v.elements[k]);
    out << json{{"id", v.id}, {"elements", slots}}.dump() << '\n';
  }
}

std::vector<ExtractedVector> load_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vectors file " + path.string());
  std::vector<ExtractedVector> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j = json::parse(text);
      ExtractedVector v;
      v.id = j.at("id").get<std::string>();
      const auto slots = j.at("elements").get<std::vector<int>>();
      if (slots.size() != kNumElements) throw std::invalid_argument("expected 33 slots");
      for (int k = 1; k <= kNumElements; ++k) v.elements.set(k, slots[std::size_t(k - 1)]);
      out.push_back(std::move(v));
    } catch (const std::exception& e) {
      throw std::runtime_error("malformed vector at line " + std::to_string(line) + ": " +
                               e.what());
    }
  }
  return out;
}

}  // namespace probation
