#include <algorithm>

#include "webnav/agent.hpp"

namespace webnav {

Vocabulary Vocabulary::build(const std::vector<std::string>& texts) {
  std::map<std::string, std::size_t> counts;
  for (const auto& t : texts) {
    for (auto& tok : tokenize(t)) ++counts[tok];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary v;
  v.tokens_.push_back("<pad>");
  auto add = [&](const std::string& tok) {
    if (v.tokens_.size() >= static_cast<std::size_t>(kSize)) return;
    if (v.lookup_.emplace(tok, static_cast<int>(v.tokens_.size())).second) v.tokens_.push_back(tok);
  };
  for (const auto& [tok, n] : ranked) add(tok);
  for (const auto& tok : simulator_lexicon()) add(tok);
  for (int i = 0; v.tokens_.size() < static_cast<std::size_t>(kSize); ++i) add("<unused" + std::to_string(i) + ">");
  return v;
}

Vocabulary Vocabulary::standard() { return build({}); }

Vocabulary Vocabulary::from_lines(const std::vector<std::string>& lines) {
  if (lines.size() != static_cast<std::size_t>(kSize)) {
    throw ParseError("vocabulary: expected " + std::to_string(kSize) + " lines, got " +
                     std::to_string(lines.size()));
  }
  Vocabulary v;
  v.tokens_ = lines;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (!v.lookup_.emplace(lines[i], static_cast<int>(i)).second) {
      throw ParseError("vocabulary: duplicate token '" + lines[i] + "' at line " + std::to_string(i + 1));
    }
  }
  return v;
}

std::optional<int> Vocabulary::index(const std::string& token) const {
  auto it = lookup_.find(token);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::vector<int> Vocabulary::encode(const std::string& text) const {
  std::vector<int> out;
  for (const auto& tok : tokenize(text)) {
    auto id = index(tok);
    if (!id) throw UnknownTokenError("token '" + tok + "' is not in the vocabulary");
    out.push_back(*id);
  }
  return out;
}

std::string Vocabulary::decode(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    if (id == kPad) break;
    if (!out.empty()) out += ' ';
    out += token(id);
  }
  return out;
}

std::string Vocabulary::to_text() const {
  std::string out;
  for (const auto& t : tokens_) {
    out += t;
    out += '\n';
  }
  return out;
}

}  // namespace webnav
