#include <fstream>
#include <set>

#include "json.hpp"
#include "probation/extraction.hpp"

namespace probation {

using nlohmann::json;

namespace {

struct Seed {
  const char* name;
  Condition condition;
};

// Element names are editorial: the taxonomy's frequencies are known, its
// labels are not. Grouped by the Art. 72 condition each element informs.
constexpr Seed kCanonical[kNumElements] = {
    {"victim_at_fault", Condition::MildCircumstances},
    {"excessive_self_defense", Condition::MildCircumstances},
    {"coerced_participation", Condition::MildCircumstances},
    {"family_or_neighbor_dispute", Condition::MildCircumstances},
    {"minor_role_in_offense", Condition::MildCircumstances},
    {"armed_with_weapon", Condition::MildCircumstances},
    {"compensated_victim", Condition::Remorse},
    {"obtained_forgiveness", Condition::Remorse},
    {"truthful_confession", Condition::Remorse},
    {"voluntary_surrender", Condition::Remorse},
    {"pleaded_guilty", Condition::Remorse},
    {"apologized_to_victim", Condition::Remorse},
    {"returned_or_restituted", Condition::Remorse},
    {"meritorious_service", Condition::Remorse},
    {"recidivist", Condition::NoReoffendingRisk},
    {"prior_criminal_record", Condition::NoReoffendingRisk},
    {"drug_use", Condition::NoReoffendingRisk},
    {"first_offender", Condition::NoReoffendingRisk},
    {"stable_employment", Condition::NoReoffendingRisk},
    {"family_support", Condition::NoReoffendingRisk},
    {"local_resident", Condition::NoReoffendingRisk},
    {"sole_caretaker", Condition::NoReoffendingRisk},
    {"fled_the_scene", Condition::NoReoffendingRisk},
    {"gang_affiliation", Condition::NoReoffendingRisk},
    {"public_place", Condition::NoCommunityImpact},
    {"multiple_victims", Condition::NoCommunityImpact},
    {"vulnerable_victim", Condition::NoCommunityImpact},
    {"premeditated", Condition::NoCommunityImpact},
    {"group_brawl", Condition::NoCommunityImpact},
    {"community_vouched", Condition::NoCommunityImpact},
    {"property_damage_repaired", Condition::NoCommunityImpact},
    {"injury_degree", Condition::MildCircumstances},
    {"compensation_level", Condition::Remorse},
};

}  // namespace

const ElementDef* ElementRegistry::find(int id) const {
  for (const auto& e : elements)
    if (e.id == id) return &e;
  return nullptr;
}

char condition_code(Condition c) {
  switch (c) {
    case Condition::MildCircumstances: return 'a';
    case Condition::Remorse: return 'b';
    case Condition::NoReoffendingRisk: return 'c';
    case Condition::NoCommunityImpact: return 'd';
  }
  return '?';
}

Condition parse_condition(std::string_view code) {
  if (code == "a") return Condition::MildCircumstances;
  if (code == "b") return Condition::Remorse;
  if (code == "c") return Condition::NoReoffendingRisk;
  if (code == "d") return Condition::NoCommunityImpact;
  throw std::invalid_argument("unknown condition '" + std::string(code) + "'");
}

ElementRegistry canonical_registry() {
  ElementRegistry reg;
  for (int id = 1; id <= kNumElements; ++id) {
    const Seed& s = kCanonical[id - 1];
    ElementDef e;
    e.id = id;
    e.name = s.name;
    e.kind = is_categorical(id) ? ElementKind::Categorical : ElementKind::Binary;
    e.values = element_arity(id);
    e.condition = s.condition;
    reg.elements.push_back(std::move(e));
  }
  return reg;
}

std::vector<std::string> validate_registry(const ElementRegistry& registry) {
  std::vector<std::string> errors;
  if (registry.elements.size() != kNumElements) {
    errors.push_back("expected 33 elements, found " + std::to_string(registry.elements.size()));
  }
  std::set<int> seen;
  for (const auto& e : registry.elements) {
    if (e.id < 1 || e.id > kNumElements) {
      errors.push_back("element id " + std::to_string(e.id) + " outside 1..33");
      continue;
    }
    if (!seen.insert(e.id).second) errors.push_back("duplicate element " + std::to_string(e.id));
    if (e.name.empty()) errors.push_back("element " + std::to_string(e.id) + " has no name");
    if (is_categorical(e.id)) {
      if (e.kind != ElementKind::Categorical || e.values != kCategoricalArity) {
        errors.push_back("element " + std::to_string(e.id) + " must be categorical(5)");
      }
    } else if (e.kind != ElementKind::Binary || e.values != 1) {
      errors.push_back("element " + std::to_string(e.id) + " must be binary");
    }
  }
  for (int id = 1; id <= kNumElements; ++id) {
    if (!seen.count(id) && registry.elements.size() == kNumElements) {
      errors.push_back("missing element " + std::to_string(id));
    }
  }
  return errors;
}

ElementRegistry load_registry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open registry file " + path.string());
  ElementRegistry reg;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j = json::parse(text);
      ElementDef e;
      e.id = j.at("id").get<int>();
      e.name = j.at("name").get<std::string>();
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "binary") {
        e.kind = ElementKind::Binary;
      } else if (kind == "categorical") {
        e.kind = ElementKind::Categorical;
      } else {
        throw std::invalid_argument("unknown kind '" + kind + "'");
      }
      e.values = j.value("values", e.kind == ElementKind::Binary ? 1 : kCategoricalArity);
      e.condition = parse_condition(j.at("condition").get<std::string>());
      reg.elements.push_back(std::move(e));
    } catch (const std::exception& ex) {
      throw std::runtime_error("registry " + path.string() + " line " + std::to_string(line) +
                               ": " + ex.what());
    }
  }
  return reg;
}

void save_registry(const std::filesystem::path& path, const ElementRegistry& registry) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write registry file " + path.string());
  for (const auto& e : registry.elements) {
    json j{{"id", e.id},
           {"name", e.name},
           {"kind", e.kind == ElementKind::Binary ? "binary" : "categorical"},
           {"values", e.values},
           {"condition", std::string(1, condition_code(e.condition))}};
    out << j.dump() << '\n';
  }
}

}  // namespace probation
