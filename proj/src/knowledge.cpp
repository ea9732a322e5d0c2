#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "json.hpp"
#include "probation/corpus.hpp"
#include "probation/knowledge.hpp"

namespace probation {

using nlohmann::json;

namespace {

std::string pair_text(int element_id, int value) {
  return "element " + std::to_string(element_id) + " value " + std::to_string(value);
}

}  // namespace

InterpretationKB::InterpretationKB(std::map<std::pair<int, int>, std::string> entries,
                                   std::string separator, const ElementRegistry& registry)
    : entries_(std::move(entries)), separator_(std::move(separator)) {
  if (separator_.empty() || separator_.find_first_of(" \t\n") != std::string::npos) {
    throw std::invalid_argument("separator must be a single non-empty token");
  }
  for (const auto& [key, text] : entries_) {
    const ElementDef* def = registry.find(key.first);
    if (def == nullptr) throw std::invalid_argument("unknown element " + std::to_string(key.first));
    if (key.second < 1 || key.second > def->values) {
      throw std::invalid_argument("value out of arity for " + pair_text(key.first, key.second));
    }
    if (text.find_first_not_of(" \t") == std::string::npos) {
      throw std::invalid_argument("empty interpretation for " + pair_text(key.first, key.second));
    }
  }
  for (const auto& def : registry.elements) {
    for (int v = 1; v <= def.values; ++v) {
      if (!entries_.count({def.id, v})) {
        throw std::invalid_argument("missing interpretation for " + pair_text(def.id, v));
      }
    }
  }
}

const std::string& InterpretationKB::lookup(int element_id, int value) const {
  if (element_id < 1 || element_id > kNumElements) {
    throw std::out_of_range("unknown element " + std::to_string(element_id));
  }
  auto it = entries_.find({element_id, value});
  if (it == entries_.end()) {
    throw std::out_of_range("value out of arity for " + pair_text(element_id, value));
  }
  return it->second;
}

const std::string& lookup_interpretation(int element_id, int value, const InterpretationKB& kb) {
  return kb.lookup(element_id, value);
}

InterpretationKB load_kb(const std::filesystem::path& path, const ElementRegistry& registry) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open KB file " + path.string());
  std::map<std::pair<int, int>, std::string> entries;
  std::string separator = InterpretationKB::kDefaultSeparator;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    int id = 0, value = 0;
    std::string interp;
    try {
      j = json::parse(text);
      if (j.contains("separator") && !j.contains("element_id")) {
        separator = j["separator"].get<std::string>();
        continue;
      }
      id = j.at("element_id").get<int>();
      value = j.value("value", 1);
      interp = j.at("interpretation").get<std::string>();
    } catch (const json::exception& e) {
      throw std::runtime_error("malformed KB record at line " + std::to_string(line) + ": " +
                               e.what());
    }
    if (registry.find(id) == nullptr) {
      throw std::invalid_argument("unknown element " + std::to_string(id) + " at line " +
                                  std::to_string(line));
    }
    if (!entries.emplace(std::pair{id, value}, std::move(interp)).second) {
      throw std::invalid_argument("duplicate entry for " + pair_text(id, value) + " at line " +
                                  std::to_string(line));
    }
  }
  return InterpretationKB(std::move(entries), std::move(separator), registry);
}

void save_kb(const std::filesystem::path& path, const InterpretationKB& kb) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write KB file " + path.string());
  out << json{{"separator", kb.separator()}}.dump() << '\n';
  for (const auto& [key, text] : kb.entries()) {
    out << json{{"element_id", key.first}, {"value", key.second}, {"interpretation", text}}.dump()
        << '\n';
  }
}

InterpretationKB default_synthetic_kb(const ElementRegistry& registry) {
  auto role = [](int id) -> std::string {
    auto rem = remorse_elements();
    auto risk = risk_elements();
    if (std::find(rem.begin(), rem.end(), id) != rem.end()) return "MITIGATING";
    if (std::find(risk.begin(), risk.end(), id) != risk.end()) return "AGGRAVATING";
    return "CONTEXTUAL";
  };
  std::map<std::pair<int, int>, std::string> entries;
  for (const auto& def : registry.elements) {
    std::string head = "LAW_" + def.name;
    std::transform(head.begin(), head.end(), head.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    for (int v = 1; v <= def.values; ++v) {
      std::string phrase = head;
      if (def.kind == ElementKind::Categorical) phrase += "_L" + std::to_string(v);
      phrase += " " + role(def.id);
      entries.emplace(std::pair{def.id, v}, std::move(phrase));
    }
  }
  return InterpretationKB(std::move(entries), InterpretationKB::kDefaultSeparator, registry);
}

LegalSequence generate_sequence(std::string doc_id, const ElementVector& v,
                                const InterpretationKB& kb) {
  LegalSequence seq;
  seq.doc_id = std::move(doc_id);
  for (int k = 1; k <= kNumElements; ++k) {
    const int value = v[k];
    if (value == 0) continue;
    if (!seq.text.empty()) {
      seq.text += ' ';
      seq.text += kb.separator();
      seq.text += ' ';
    }
    seq.text += kb.lookup(k, value);
    seq.provenance.emplace_back(k, value);
  }
  return seq;
}

void save_sequences(const std::filesystem::path& path, std::span<const LegalSequence> seqs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write sequences file " + path.string());
  for (const auto& s : seqs) {
    out << json{{"id", s.doc_id}, {"text", s.text}, {"provenance", s.provenance}}.dump() << '\n';
  }
}

std::vector<LegalSequence> load_sequences(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sequences file " + path.string());
  std::vector<LegalSequence> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j = json::parse(text);
      LegalSequence s;
      s.doc_id = j.at("id").get<std::string>();
      s.text = j.at("text").get<std::string>();
      s.provenance = j.value("provenance", std::vector<std::pair<int, int>>{});
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw std::runtime_error("malformed sequence at line " + std::to_string(line) + ": " +
                               e.what());
    }
  }
  return out;
}

}  // namespace probation
