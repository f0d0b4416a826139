#pragma once
// Independent reference implementations used as test oracles.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "webnav/agent.hpp"
#include "webnav/episode.hpp"
#include "webnav/trainer.hpp"

namespace oracle {

using namespace webnav;

// One pass per cleaning rule, each producing a fresh list.
inline ProcessedEpisode clean_actions(const RawDemonstration& raw) {
  struct Item {
    RawEvent ev;
    std::size_t idx;
  };
  std::vector<Item> no_body;
  for (std::size_t i = 0; i < raw.events.size(); ++i) {
    const auto& e = raw.events[i];
    const DomNode* n = raw.snapshots[i].find(e.ref);
    const bool body = e.type == EventType::kClick && n != nullptr && n->tag == "body";
    if (!body) no_body.push_back({e, i});
  }

  struct Act {
    Action a;
    std::size_t idx;
  };
  std::vector<Act> merged;
  for (std::size_t i = 0; i < no_body.size(); ++i) {
    const auto& e = no_body[i].ev;
    if (e.type == EventType::kClick) {
      merged.push_back({Action::click(e.ref), no_body[i].idx});
      continue;
    }
    const bool continues = i > 0 && no_body[i - 1].ev.type == EventType::kKeydown && no_body[i - 1].ev.ref == e.ref;
    if (!continues) merged.push_back({Action::type_text(e.ref, ""), no_body[i].idx});
    std::string& text = merged.back().a.text;
    if (e.key.size() == 1) text += e.key;
    else if (e.key == "Backspace" && !text.empty()) text.erase(text.size() - 1);
  }

  std::vector<Act> last_typing;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    bool later = false;
    for (std::size_t j = i + 1; j < merged.size(); ++j) {
      if (!merged[i].a.is_click() && !merged[j].a.is_click() && merged[j].a.ref == merged[i].a.ref) later = true;
    }
    if (!later) last_typing.push_back(merged[i]);
  }

  ProcessedEpisode out{raw.id, raw.task, raw.utterance, {}};
  for (std::size_t i = 0; i < last_typing.size(); ++i) {
    bool later = false;
    for (std::size_t j = i + 1; j < last_typing.size(); ++j) {
      if (last_typing[j].a == last_typing[i].a) later = true;
    }
    if (!later) out.steps.push_back({raw.snapshots[last_typing[i].idx], last_typing[i].a});
  }
  return out;
}

// G_t = sum_k gamma^(k-t) r_k
inline std::vector<double> returns(const std::vector<double>& r, double gamma) {
  std::vector<double> g(r.size(), 0.0);
  for (std::size_t t = 0; t < r.size(); ++t) {
    for (std::size_t k = t; k < r.size(); ++k) g[t] += std::pow(gamma, static_cast<double>(k - t)) * r[k];
  }
  return g;
}

inline double f1(double overlap, std::size_t nc, std::size_t nr) {
  if (overlap == 0) return 0.0;
  const double p = overlap / static_cast<double>(nc);
  const double r = overlap / static_cast<double>(nr);
  return 2 * p * r / (p + r);
}

inline double rouge1(const std::vector<std::string>& c, const std::vector<std::string>& r) {
  if (c.empty() || r.empty()) return 0.0;
  std::map<std::string, std::pair<int, int>> counts;
  for (const auto& t : c) ++counts[t].first;
  for (const auto& t : r) ++counts[t].second;
  int overlap = 0;
  for (const auto& [t, n] : counts) overlap += std::min(n.first, n.second);
  return f1(overlap, c.size(), r.size());
}

inline double rougeL(const std::vector<std::string>& c, const std::vector<std::string>& r) {
  if (c.empty() || r.empty()) return 0.0;
  std::vector<std::vector<int>> dp(c.size() + 1, std::vector<int>(r.size() + 1, 0));
  for (std::size_t i = 1; i <= c.size(); ++i) {
    for (std::size_t j = 1; j <= r.size(); ++j) {
      dp[i][j] = c[i - 1] == r[j - 1] ? dp[i - 1][j - 1] + 1 : std::max(dp[i - 1][j], dp[i][j - 1]);
    }
  }
  return f1(dp[c.size()][r.size()], c.size(), r.size());
}

// Random event stream over a fixed page; exercises every cleaning rule.
inline RawDemonstration random_stream(std::uint64_t seed) {
  Rng rng(seed);
  auto [env, obs] = reset("enter-text", seed, RefMode::kOrdered);
  const DomSnapshot& snap = env.snapshot;
  const std::vector<int> refs = snap.refs();
  RawDemonstration d;
  d.id = "s" + std::to_string(seed);
  d.task = "enter-text";
  d.utterance = env.utterance;
  const std::vector<std::string> keys = {"a", "b", "c", "Backspace", "Enter", "Shift"};
  const int n = uniform_int(rng, 0, 30);
  std::int64_t t = 0;
  for (int i = 0; i < n; ++i) {
    RawEvent e;
    e.type = uniform_index(rng, 2) == 0 ? EventType::kClick : EventType::kKeydown;
    e.ref = refs[uniform_index(rng, std::min<std::size_t>(refs.size(), 3))];
    if (e.type == EventType::kKeydown) e.key = pick(keys, rng);
    e.timestamp = t;
    t += static_cast<std::int64_t>(uniform_index(rng, 3));
    d.events.push_back(e);
    d.snapshots.push_back(snap);
  }
  return d;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)}); }

// Random feature vector with one candidate row per ref of `snap`.
inline FeatureVector random_features(Rng& rng, const DomSnapshot& snap) {
  FeatureVector f;
  f.values.resize(kFeatureDim);
  for (double& v : f.values) v = uniform_real(rng) < 0.2 ? uniform_real(rng) * 2 - 1 : 0.0;
  for (int ref : snap.refs()) {
    Candidate c;
    c.ref = ref;
    for (double& v : c.x) v = uniform_real(rng) * 2 - 1;
    f.candidates.push_back(c);
  }
  for (int& tok : f.copy_tokens) tok = uniform_index(rng, 4) == 0 ? -1 : static_cast<int>(uniform_index(rng, 40));
  return f;
}

}  // namespace oracle
