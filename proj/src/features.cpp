#include <algorithm>
#include <cmath>
#include <set>

#include "webnav/agent.hpp"

namespace webnav {
namespace {

using TokenSet = std::set<std::string>;

TokenSet token_set(const std::string& s) {
  auto t = tokenize(s);
  return {t.begin(), t.end()};
}

double overlap(const TokenSet& node, const TokenSet& query) {
  if (node.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& t : node) hit += query.count(t);
  return static_cast<double>(hit) / static_cast<double>(node.size());
}

void hashed_bow(const std::string& text, std::span<double> out) {
  auto tokens = tokenize(text);
  if (tokens.empty()) return;
  const double w = 1.0 / std::sqrt(static_cast<double>(tokens.size()));
  for (const auto& t : tokens) out[fnv1a(t) % out.size()] += w;
}

void walk(const DomNode& n, const DomNode* parent, std::vector<std::pair<const DomNode*, const DomNode*>>& out) {
  out.emplace_back(&n, parent);
  for (const DomNode& c : n.children) walk(c, &n, out);
}

Candidate candidate_row(const DomNode& n, const DomNode* parent, const TokenSet& subtask, const TokenSet& utterance) {
  Candidate c;
  c.ref = n.ref;
  auto& x = c.x;
  x[static_cast<std::size_t>(tag_code(n.tag) - 1)] = 1.0;
  const TokenSet text = token_set(n.text);
  x[13] = overlap(text, subtask);
  x[14] = (!text.empty() && x[13] == 1.0) ? 1.0 : 0.0;
  x[15] = overlap(token_set(n.attr("class") + " " + n.attr("id")), subtask);
  if (parent) x[16] = overlap(token_set(parent->text + " " + parent->attr("id")), subtask);
  x[17] = n.flags.checked ? 1.0 : 0.0;
  x[18] = n.flags.selected ? 1.0 : 0.0;
  x[19] = n.flags.focused ? 1.0 : 0.0;
  x[20] = n.value.empty() ? 0.0 : 1.0;
  const TokenSet value = token_set(n.value);
  x[21] = (!value.empty() && overlap(value, subtask) == 1.0) ? 1.0 : 0.0;
  x[22] = n.bbox.x / static_cast<double>(kPageSize);
  x[23] = n.bbox.y / static_cast<double>(kPageSize);
  x[24] = n.bbox.w / static_cast<double>(kPageSize);
  x[25] = n.bbox.h / static_cast<double>(kPageSize);
  x[26] = text.empty() ? 0.0 : 1.0;
  x[27] = overlap(text, utterance);
  x[28] = n.children.empty() ? 1.0 : 0.0;
  x[29] = std::min(1.0, static_cast<double>(tokenize(n.text).size()) / 8.0);
  x[30] = 1.0;
  return c;
}

}  // namespace

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::kNone: return "none";
    case Ablation::kNoHistory: return "no_history";
    case Ablation::kNoVision: return "no_vision";
    case Ablation::kNoPlan: return "no_plan";
  }
  return "none";
}

Ablation parse_ablation(const std::string& s) {
  if (s == "none") return Ablation::kNone;
  if (s == "no_history" || s == "no-history") return Ablation::kNoHistory;
  if (s == "no_vision" || s == "no-vision") return Ablation::kNoVision;
  if (s == "no_plan" || s == "no-plan") return Ablation::kNoPlan;
  throw ConfigError("unknown ablation '" + s + "'");
}

FeatureVector encode_features(const Observation& obs, const std::vector<Action>& history,
                              const std::string& subtask, Ablation ablation, const Vocabulary& vocab) {
  FeatureVector f;
  f.values.assign(kFeatureDim, 0.0);
  std::span<double> v(f.values);
  const std::string& effective = ablation == Ablation::kNoPlan ? obs.utterance : subtask;

  hashed_bow(obs.utterance, v.subspan(kUtteranceOffset, kUtteranceDim));
  hashed_bow(effective, v.subspan(kSubtaskOffset, kSubtaskDim));

  const TokenSet sub_tokens = token_set(effective);
  const TokenSet utt_tokens = token_set(obs.utterance);
  std::vector<std::pair<const DomNode*, const DomNode*>> nodes;
  walk(obs.snapshot.root(), nullptr, nodes);
  f.candidates.reserve(nodes.size());
  for (const auto& [n, parent] : nodes) f.candidates.push_back(candidate_row(*n, parent, sub_tokens, utt_tokens));

  // Pooled page summary: mean, max, overlap-weighted mean and min per column.
  std::span<double> pooled = v.subspan(kDomOffset, kDomPooledDim);
  double weight_sum = 0.0;
  for (int k = 0; k < kCandidateDim; ++k) {
    pooled[static_cast<std::size_t>(kCandidateDim + k)] = -1e300;
    pooled[static_cast<std::size_t>(3 * kCandidateDim + k)] = 1e300;
  }
  for (const Candidate& c : f.candidates) {
    const double w = c.x[13];
    weight_sum += w;
    for (std::size_t k = 0; k < kCandidateDim; ++k) {
      pooled[k] += c.x[k];
      pooled[kCandidateDim + k] = std::max(pooled[kCandidateDim + k], c.x[k]);
      pooled[2 * kCandidateDim + k] += w * c.x[k];
      pooled[3 * kCandidateDim + k] = std::min(pooled[3 * kCandidateDim + k], c.x[k]);
    }
  }
  const double n = static_cast<double>(f.candidates.size());
  for (std::size_t k = 0; k < kCandidateDim; ++k) {
    pooled[k] /= n;
    if (weight_sum > 0) pooled[2 * kCandidateDim + k] /= weight_sum;
  }

  if (ablation != Ablation::kNoVision) {
    for (int i = 0; i < kRasterCells; ++i) {
      v[static_cast<std::size_t>(kRasterOffset + i)] = obs.raster.cells[static_cast<std::size_t>(i)] / static_cast<double>(kNumTagCodes);
    }
  }

  if (ablation != Ablation::kNoHistory) {
    const int per = kHistoryDim / kHistoryActions;
    for (int k = 0; k < kHistoryActions && k < static_cast<int>(history.size()); ++k) {
      const Action& a = history[history.size() - 1 - static_cast<std::size_t>(k)];
      std::span<double> slot = v.subspan(static_cast<std::size_t>(kHistoryOffset + k * per), static_cast<std::size_t>(per));
      slot[0] = 1.0;
      slot[a.is_click() ? 1 : 2] = 1.0;
      if (const DomNode* target = obs.snapshot.find(a.ref)) {
        slot[static_cast<std::size_t>(2 + tag_code(target->tag))] = 1.0;
      }
    }
  }

  f.copy_tokens.fill(-1);
  auto sub = tokenize(effective);
  for (std::size_t i = 0; i < sub.size() && i < static_cast<std::size_t>(kCopyPositions); ++i) {
    if (auto id = vocab.index(sub[i])) f.copy_tokens[i] = *id;
  }
  return f;
}

}  // namespace webnav
