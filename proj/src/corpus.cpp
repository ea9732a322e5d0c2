#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "probation/corpus.hpp"
#include "probation/random.hpp"

namespace probation {

using nlohmann::json;

namespace {

int parse_label(const json& j, const char* field, std::size_t line) {
  if (!j.is_number_integer() || (j.get<int>() != 0 && j.get<int>() != 1)) {
    throw CorpusError(std::string("field '") + field + "' must be 0 or 1", line);
  }
  return j.get<int>();
}

JudgmentDocument parse_record(const std::string& text, std::size_t line) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CorpusError(std::string("malformed record (") + e.what() + ")", line);
  }
  if (!j.is_object()) throw CorpusError("malformed record (not an object)", line);
  JudgmentDocument doc;
  if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty()) {
    throw CorpusError("malformed record (missing id)", line);
  }
  if (!j.contains("fact") || !j["fact"].is_string()) {
    throw CorpusError("malformed record (missing fact)", line);
  }
  doc.id = j["id"].get<std::string>();
  doc.fact = j["fact"].get<std::string>();
  if (j.contains("gold_aux") && !j["gold_aux"].is_null()) {
    doc.gold_aux = parse_label(j["gold_aux"], "gold_aux", line);
  }
  if (j.contains("gold_main") && !j["gold_main"].is_null()) {
    doc.gold_main = parse_label(j["gold_main"], "gold_main", line);
  }
  if (doc.gold_main == 1 && doc.gold_aux == 0) throw CorpusError("label inconsistency", line);
  if (j.contains("meta") && !j["meta"].is_null()) {
    const json& m = j["meta"];
    try {
      DefendantMeta meta;
      meta.age_years = m.value("age_years", 0);
      meta.pregnant = m.value("pregnant", false);
      meta.sentence_months = m.value("sentence_months", 0);
      meta.detention = m.value("detention", false);
      if (meta.age_years < 0 || meta.sentence_months < 0) {
        throw CorpusError("malformed record (negative meta field)", line);
      }
      doc.meta = meta;
    } catch (const json::exception& e) {
      throw CorpusError(std::string("malformed record (meta: ") + e.what() + ")", line);
    }
  }
  if (j.contains("gold_elements") && !j["gold_elements"].is_null()) {
    const json& g = j["gold_elements"];
    if (!g.is_array() || g.size() != kNumElements) {
      throw CorpusError("malformed record (gold_elements must have 33 entries)", line);
    }
    ElementVector v;
    for (int k = 1; k <= kNumElements; ++k) {
      const json& slot = g[static_cast<std::size_t>(k - 1)];
      if (!slot.is_number_integer()) throw CorpusError("malformed record (gold_elements)", line);
      try {
        v.set(k, slot.get<int>());
      } catch (const std::out_of_range& e) {
        throw CorpusError(std::string("malformed record (") + e.what() + ")", line);
      }
    }
    doc.gold_elements = v;
  }
  return doc;
}

}  // namespace

std::string to_record(const JudgmentDocument& doc) {
  json j;
  j["id"] = doc.id;
  j["fact"] = doc.fact;
  j["gold_aux"] = doc.gold_aux ? json(*doc.gold_aux) : json(nullptr);
  j["gold_main"] = doc.gold_main ? json(*doc.gold_main) : json(nullptr);
  if (doc.meta) {
    j["meta"] = {{"age_years", doc.meta->age_years},
                 {"pregnant", doc.meta->pregnant},
                 {"sentence_months", doc.meta->sentence_months},
                 {"detention", doc.meta->detention}};
  }
  if (doc.gold_elements) {
    json slots = json::array();
    for (int k = 1; k <= kNumElements; ++k) slots.push_back((*doc.gold_elements)[k]);
    j["gold_elements"] = std::move(slots);
  }
  return j.dump();
}

std::vector<JudgmentDocument> read_corpus(std::istream& in) {
  std::vector<JudgmentDocument> docs;
  std::set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    JudgmentDocument doc = parse_record(text, line);
    if (!seen.insert(doc.id).second) throw CorpusError("duplicate id '" + doc.id + "'", line);
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<JudgmentDocument> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file " + path.string());
  return read_corpus(in);
}

void write_corpus(std::ostream& out, std::span<const JudgmentDocument> docs) {
  for (const auto& doc : docs) out << to_record(doc) << '\n';
}

void save_corpus(const std::filesystem::path& path, std::span<const JudgmentDocument> docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write corpus file " + path.string());
  write_corpus(out, docs);
}

SplitSizes split_sizes(std::size_t n) {
  SplitSizes s;
  // round half away from zero; 0.8 * n is exact enough for n < 2^50
  s.train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n)));
  const std::size_t rest = n - s.train;
  s.val = (rest + 1) / 2;
  s.test = rest - s.val;
  return s;
}

DatasetSplit split_corpus(std::span<const JudgmentDocument> docs, std::uint64_t seed) {
  if (docs.size() < 10) {
    throw std::invalid_argument("split_corpus needs at least 10 documents, got " +
                                std::to_string(docs.size()));
  }
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0x5117));
  rng.shuffle(std::span<std::size_t>(order));

  const SplitSizes sizes = split_sizes(docs.size());
  DatasetSplit split;
  split.seed = seed;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::string& id = docs[order[i]].id;
    if (i < sizes.train) {
      split.train.push_back(id);
    } else if (i < sizes.train + sizes.val) {
      split.val.push_back(id);
    } else {
      split.test.push_back(id);
    }
  }
  return split;
}

void save_split(const std::filesystem::path& path, const DatasetSplit& split) {
  json j{{"seed", split.seed}, {"train", split.train}, {"val", split.val}, {"test", split.test}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write split file " + path.string());
  out << j.dump(1) << '\n';
}

DatasetSplit load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open split file " + path.string());
  json j = json::parse(in);
  DatasetSplit split;
  split.seed = j.at("seed").get<std::uint64_t>();
  split.train = j.at("train").get<std::vector<std::string>>();
  split.val = j.at("val").get<std::vector<std::string>>();
  split.test = j.at("test").get<std::vector<std::string>>();
  return split;
}

CorpusStats corpus_stats(std::span<const JudgmentDocument> docs) {
  CorpusStats s;
  s.n_docs = docs.size();
  std::vector<std::size_t> lengths;
  lengths.reserve(docs.size());
  for (const auto& doc : docs) {
    if (doc.gold_aux) {
      ++s.n_aux_labeled;
      s.n_aux_positive += *doc.gold_aux == 1;
    }
    if (doc.gold_main) {
      ++s.n_main_labeled;
      s.n_main_positive += *doc.gold_main == 1;
    }
    std::istringstream words(doc.fact);
    std::size_t n = 0;
    for (std::string w; words >> w;) ++n;
    lengths.push_back(n);
  }
  if (s.n_aux_labeled) s.aux_rate = double(s.n_aux_positive) / double(s.n_aux_labeled);
  if (s.n_main_labeled) s.main_rate = double(s.n_main_positive) / double(s.n_main_labeled);
  if (!lengths.empty()) {
    std::sort(lengths.begin(), lengths.end());
    // nearest-rank percentile
    auto pct = [&](double p) {
      auto rank = static_cast<std::size_t>(std::ceil(p * double(lengths.size())));
      return lengths[std::max<std::size_t>(rank, 1) - 1];
    };
    s.len_min = lengths.front();
    s.len_max = lengths.back();
    s.len_p50 = pct(0.50);
    s.len_p90 = pct(0.90);
    s.len_p99 = pct(0.99);
  }
  return s;
}

}  // namespace probation
