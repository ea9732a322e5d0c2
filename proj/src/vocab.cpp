#include <algorithm>
#include <fstream>
#include <map>

#include "probation/encoding.hpp"

namespace probation {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  tokens_ = {kPadToken, kUnkToken, kSepToken};
  tokens_.insert(tokens_.end(), std::make_move_iterator(tokens.begin()),
                 std::make_move_iterator(tokens.end()));
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw std::invalid_argument("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

TokenId Vocabulary::index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocabulary " + path.string());
  for (std::size_t i = 0; i < tokens_.size(); ++i) out << tokens_[i] << '\t' << i << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw std::runtime_error("malformed vocabulary line: " + line);
    if (std::stoul(line.substr(tab + 1)) != expected) {
      throw std::runtime_error("vocabulary indices must be contiguous from 0");
    }
    if (expected >= 3) tokens.push_back(line.substr(0, tab));
    ++expected;
  }
  if (expected < 3) throw std::runtime_error("vocabulary is missing reserved tokens");
  return Vocabulary(std::move(tokens));
}

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (i < text.size()) {
    while (i < text.size() && space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !space(text[j])) ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

Vocabulary build_vocab_from_texts(std::span<const std::string_view> texts, std::size_t min_freq) {
  std::map<std::string, std::size_t, std::less<>> freq;
  for (auto text : texts) {
    for (auto tok : split_whitespace(text)) {
      auto it = freq.find(tok);
      if (it == freq.end()) {
        freq.emplace(std::string(tok), 1);
      } else {
        ++it->second;
      }
    }
  }
  std::vector<std::pair<std::string, std::size_t>> entries;
  for (auto& [tok, n] : freq) {
    if (n >= min_freq && tok != Vocabulary::kPadToken && tok != Vocabulary::kUnkToken &&
        tok != Vocabulary::kSepToken) {
      entries.emplace_back(tok, n);
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  tokens.reserve(entries.size());
  for (auto& e : entries) tokens.push_back(std::move(e.first));
  return Vocabulary(std::move(tokens));
}

Vocabulary build_vocab(std::span<const JudgmentDocument> train_docs,
                       std::span<const LegalSequence> train_seqs, std::size_t min_freq) {
  if (train_docs.empty()) throw std::invalid_argument("cannot build a vocabulary from an empty training split");
  std::vector<std::string_view> texts;
  for (const auto& d : train_docs) texts.push_back(d.fact);
  for (const auto& s : train_seqs) texts.push_back(s.text);
  return build_vocab_from_texts(texts, min_freq);
}

TokenSequence tokenize(std::string_view text, const Vocabulary& vocab, std::size_t max_len) {
  TokenSequence seq;
  seq.ids.assign(max_len, Vocabulary::kPad);
  for (auto tok : split_whitespace(text)) {
    if (seq.length == max_len) break;
    seq.ids[seq.length++] = vocab.index(tok);
    seq.surface.emplace_back(tok);
  }
  return seq;
}

TokenSequence concat_inputs(const TokenSequence& f, const TokenSequence& q, std::size_t max_len) {
  TokenSequence out;
  out.ids.assign(max_len, Vocabulary::kPad);
  if (max_len == 0) return out;
  const std::size_t budget = max_len - 1;  // SEP always present
  const std::size_t keep_f = std::min(f.length, budget > q.length ? budget - q.length : 0);
  const std::size_t keep_q = std::min(q.length, budget - keep_f);
  auto push = [&](TokenId id, const std::string& surface) {
    out.ids[out.length++] = id;
    out.surface.push_back(surface);
  };
  for (std::size_t i = 0; i < keep_f; ++i) push(f.ids[i], f.surface[i]);
  push(Vocabulary::kSep, Vocabulary::kSepToken);
  for (std::size_t i = 0; i < keep_q; ++i) push(q.ids[i], q.surface[i]);
  return out;
}

}  // namespace probation
