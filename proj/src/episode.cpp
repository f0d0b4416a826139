#include "webnav/episode.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "webnav/util.hpp"

namespace webnav {

using nlohmann::json;

json demonstration_to_json(const RawDemonstration& d) {
  json events = json::array();
  for (const RawEvent& e : d.events) {
    json je = {{"type", e.type == EventType::kClick ? "click" : "keydown"},
               {"ref", e.ref},
               {"timestamp", e.timestamp}};
    if (e.type == EventType::kKeydown) je["key"] = e.key;
    events.push_back(std::move(je));
  }
  json snaps = json::array();
  for (const DomSnapshot& s : d.snapshots) snaps.push_back(dom_to_json(s.root()));
  return {{"id", d.id}, {"task", d.task}, {"utterance", d.utterance},
          {"events", std::move(events)}, {"snapshots", std::move(snaps)}};
}

RawDemonstration demonstration_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("demonstration: expected object");
  RawDemonstration d;
  auto str_field = [&](const char* key, bool required) -> std::string {
    if (!j.contains(key)) {
      if (required) throw ParseError(std::string("demonstration.") + key + ": missing");
      return {};
    }
    if (!j[key].is_string()) throw ParseError(std::string("demonstration.") + key + ": expected string");
    return j[key].get<std::string>();
  };
  d.id = str_field("id", false);
  d.task = str_field("task", true);
  d.utterance = str_field("utterance", true);
  if (!j.contains("events") || !j["events"].is_array()) throw ParseError("demonstration.events: expected array");
  if (!j.contains("snapshots") || !j["snapshots"].is_array()) {
    throw ParseError("demonstration.snapshots: expected array");
  }
  const json& events = j["events"];
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::string where = "demonstration.events[" + std::to_string(i) + "]";
    const json& je = events[i];
    if (!je.is_object()) throw ParseError(where + ": expected object");
    RawEvent e;
    if (!je.contains("type") || !je["type"].is_string()) throw ParseError(where + ".type: missing");
    const std::string type = je["type"].get<std::string>();
    if (type == "click") e.type = EventType::kClick;
    else if (type == "keydown") e.type = EventType::kKeydown;
    else throw ParseError(where + ".type: unknown event type '" + type + "'");
    if (!je.contains("ref") || !je["ref"].is_number_integer()) throw ParseError(where + ".ref: missing");
    e.ref = je["ref"].get<int>();
    if (!je.contains("timestamp") || !je["timestamp"].is_number_integer()) {
      throw ParseError(where + ".timestamp: missing");
    }
    e.timestamp = je["timestamp"].get<std::int64_t>();
    if (e.type == EventType::kKeydown) {
      if (!je.contains("key") || !je["key"].is_string() || je["key"].get<std::string>().empty()) {
        throw ParseError(where + ".key: keydown needs a key");
      }
      e.key = je["key"].get<std::string>();
    } else if (je.contains("key")) {
      throw ParseError(where + ".key: click events carry no key");
    }
    if (!d.events.empty() && e.timestamp < d.events.back().timestamp) {
      throw ParseError(where + ".timestamp: timestamps must be nondecreasing");
    }
    d.events.push_back(std::move(e));
  }
  const json& snaps = j["snapshots"];
  if (snaps.size() != d.events.size()) {
    throw ParseError("demonstration.snapshots: expected one snapshot per event");
  }
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    const std::string where = "demonstration.snapshots[" + std::to_string(i) + "]";
    try {
      d.snapshots.emplace_back(dom_from_json(snaps[i], where));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return d;
}

RawDemonstration parse_demonstration(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("demonstration: malformed JSON: ") + e.what());
  }
  return demonstration_from_json(j);
}

json episode_to_json(const ProcessedEpisode& e) {
  json steps = json::array();
  for (const EpisodeStep& s : e.steps) {
    steps.push_back({{"dom", dom_to_json(s.snapshot.root())}, {"action", action_to_json(s.action)}});
  }
  return {{"id", e.id}, {"task", e.task}, {"utterance", e.utterance}, {"steps", std::move(steps)}};
}

ProcessedEpisode episode_from_json(const json& j) {
  ProcessedEpisode e;
  try {
    e.id = j.value("id", std::string());
    e.task = j.at("task").get<std::string>();
    e.utterance = j.at("utterance").get<std::string>();
    const json& steps = j.at("steps");
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const std::string where = "episode.steps[" + std::to_string(i) + "]";
      e.steps.push_back({DomSnapshot(dom_from_json(steps[i].at("dom"), where + ".dom")),
                         action_from_json(steps[i].at("action"), where + ".action")});
    }
  } catch (const json::exception& ex) {
    throw ParseError(std::string("episode: ") + ex.what());
  }
  return e;
}

namespace {

template <typename T, typename Fn>
std::vector<T> read_jsonl(const std::string& path, Fn&& parse) {
  std::vector<T> out;
  std::size_t lineno = 0;
  for (const std::string& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(parse(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::vector<RawDemonstration> read_demonstrations(const std::string& path) {
  return read_jsonl<RawDemonstration>(path, [](const json& j) { return demonstration_from_json(j); });
}

std::vector<ProcessedEpisode> read_episodes(const std::string& path) {
  return read_jsonl<ProcessedEpisode>(path, [](const json& j) { return episode_from_json(j); });
}

std::string episodes_to_jsonl(const std::vector<ProcessedEpisode>& episodes) {
  std::string out;
  for (const auto& e : episodes) {
    out += episode_to_json(e).dump();
    out += '\n';
  }
  return out;
}

ProcessedEpisode clean_actions(const RawDemonstration& raw) {
  // Rule 1: body clicks.
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < raw.events.size(); ++i) {
    const RawEvent& e = raw.events[i];
    if (e.type == EventType::kClick) {
      const DomNode* n = raw.snapshots[i].find(e.ref);
      if (n && n->tag == "body") continue;
    }
    kept.push_back(i);
  }

  // Rule 2: maximal keydown runs on one ref become a single typing action.
  struct Pending {
    Action action;
    std::size_t first_event;
  };
  std::vector<Pending> actions;
  for (std::size_t k = 0; k < kept.size();) {
    const RawEvent& e = raw.events[kept[k]];
    if (e.type == EventType::kClick) {
      actions.push_back({Action::click(e.ref), kept[k]});
      ++k;
      continue;
    }
    std::string text;
    const std::size_t first = kept[k];
    while (k < kept.size() && raw.events[kept[k]].type == EventType::kKeydown &&
           raw.events[kept[k]].ref == e.ref) {
      const std::string& key = raw.events[kept[k]].key;
      if (key.size() == 1) {
        text += key;
      } else if (key == "Backspace" && !text.empty()) {
        text.pop_back();
      }
      ++k;
    }
    actions.push_back({Action::type_text(e.ref, std::move(text)), first});
  }

  // Rule 3: last typing action per ref.
  std::vector<bool> drop(actions.size(), false);
  std::set<int> typed;
  for (std::size_t i = actions.size(); i-- > 0;) {
    if (actions[i].action.is_click()) continue;
    if (!typed.insert(actions[i].action.ref).second) drop[i] = true;
  }
  // Rule 4: last copy of each repeated action.
  std::set<Action> seen;
  for (std::size_t i = actions.size(); i-- > 0;) {
    if (drop[i]) continue;
    if (!seen.insert(actions[i].action).second) drop[i] = true;
  }

  ProcessedEpisode out;
  out.id = raw.id;
  out.task = raw.task;
  out.utterance = raw.utterance;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (!drop[i]) out.steps.push_back({raw.snapshots[actions[i].first_event], actions[i].action});
  }
  return out;
}

RawDemonstration rewrap(const ProcessedEpisode& episode) {
  RawDemonstration d;
  d.id = episode.id;
  d.task = episode.task;
  d.utterance = episode.utterance;
  std::int64_t t = 0;
  for (const EpisodeStep& s : episode.steps) {
    if (s.action.is_click()) {
      d.events.push_back({EventType::kClick, s.action.ref, {}, t});
      d.snapshots.push_back(s.snapshot);
      t += 100;
      continue;
    }
    for (char c : s.action.text) {
      d.events.push_back({EventType::kKeydown, s.action.ref, std::string(1, c), t});
      d.snapshots.push_back(s.snapshot);
      t += 100;
    }
  }
  return d;
}

RawDemonstration demonstration_from_trace(const std::vector<TraceRecord>& trace, const std::string& id) {
  RawDemonstration d;
  d.id = id;
  if (trace.empty()) return d;
  d.task = trace.front().task;
  d.utterance = trace.front().utterance;
  std::int64_t t = 0;
  for (const TraceRecord& r : trace) {
    DomSnapshot snap(r.dom);
    if (r.action.is_click()) {
      d.events.push_back({EventType::kClick, r.action.ref, {}, t});
      d.snapshots.push_back(snap);
      t += 100;
      continue;
    }
    for (char c : r.action.text) {
      d.events.push_back({EventType::kKeydown, r.action.ref, std::string(1, c), t});
      d.snapshots.push_back(snap);
      t += 100;
    }
  }
  return d;
}

PatchSet parse_patches(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("patch file: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("patch file: expected object keyed by episode id");
  PatchSet out;
  for (const auto& [id, list] : j.items()) {
    if (!list.is_array()) throw ParseError("patch file." + id + ": expected array");
    out[id] = list;
  }
  return out;
}

std::vector<ProcessedEpisode> apply_patches(std::vector<ProcessedEpisode> episodes, const PatchSet& patches) {
  for (ProcessedEpisode& e : episodes) {
    auto it = patches.find(e.id);
    if (it == patches.end()) continue;
    std::vector<std::size_t> deletions;
    for (const json& p : it->second) {
      if (!p.contains("index") || !p["index"].is_number_unsigned()) {
        throw ParseError("patch " + e.id + ": missing index");
      }
      const auto idx = p["index"].get<std::size_t>();
      if (idx >= e.steps.size()) throw ParseError("patch " + e.id + ": index out of range");
      if (p.value("delete", false)) {
        deletions.push_back(idx);
      } else {
        e.steps[idx].action = action_from_json(p.at("action"), "patch " + e.id + ".action");
      }
    }
    std::sort(deletions.rbegin(), deletions.rend());
    deletions.erase(std::unique(deletions.begin(), deletions.end()), deletions.end());
    for (std::size_t idx : deletions) e.steps.erase(e.steps.begin() + static_cast<std::ptrdiff_t>(idx));
  }
  return episodes;
}

std::vector<ProcessedEpisode> downsample(const std::vector<ProcessedEpisode>& dataset, std::size_t cap,
                                         std::uint64_t seed) {
  if (cap == 0) throw ConfigError("downsample: cap must be positive");
  std::map<std::string, std::vector<std::size_t>> by_task;
  for (std::size_t i = 0; i < dataset.size(); ++i) by_task[dataset[i].task].push_back(i);
  std::vector<bool> keep(dataset.size(), false);
  for (const auto& [task, idx] : by_task) {
    if (idx.size() <= cap) {
      for (std::size_t i : idx) keep[i] = true;
      continue;
    }
    Rng rng(mix_seed(seed, fnv1a(task)));
    for (std::size_t k : sample_indices(rng, idx.size(), cap)) keep[idx[k]] = true;
  }
  std::vector<ProcessedEpisode> out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (keep[i]) out.push_back(dataset[i]);
  }
  return out;
}

DatasetStats dataset_stats(const std::vector<ProcessedEpisode>& dataset) {
  DatasetStats s;
  for (const auto& e : dataset) ++s.per_task_counts[e.task];
  if (!s.per_task_counts.empty()) {
    s.mean_per_task = static_cast<double>(dataset.size()) / static_cast<double>(s.per_task_counts.size());
  }
  return s;
}

std::string stats_to_csv(const DatasetStats& stats) {
  std::string out = "task,count\n";
  for (const auto& [task, n] : stats.per_task_counts) out += task + "," + std::to_string(n) + "\n";
  return out;
}

std::map<int, std::size_t> ref_distribution(const std::vector<ProcessedEpisode>& episodes) {
  std::map<int, std::size_t> h;
  for (const auto& e : episodes) {
    for (const auto& s : e.steps) ++h[s.action.ref];
  }
  return h;
}

NoiseProfile parse_noise_profile(const std::string& name) {
  if (name == "none") return NoiseProfile::kNone;
  if (name == "dup-clicks") return NoiseProfile::kDupClicks;
  if (name == "body-clicks") return NoiseProfile::kBodyClicks;
  if (name == "retype") return NoiseProfile::kRetype;
  if (name == "focus-clicks") return NoiseProfile::kFocusClicks;
  if (name == "all") return NoiseProfile::kAll;
  throw ConfigError("unknown noise profile '" + name + "'");
}

std::string to_string(NoiseProfile p) {
  switch (p) {
    case NoiseProfile::kNone: return "none";
    case NoiseProfile::kDupClicks: return "dup-clicks";
    case NoiseProfile::kBodyClicks: return "body-clicks";
    case NoiseProfile::kRetype: return "retype";
    case NoiseProfile::kFocusClicks: return "focus-clicks";
    case NoiseProfile::kAll: return "all";
  }
  return "none";
}

RawDemonstration generate_demonstration(const std::string& task, std::uint64_t seed, RefMode ref_mode,
                                        NoiseProfile noise) {
  const bool all = noise == NoiseProfile::kAll;
  const bool dup = all || noise == NoiseProfile::kDupClicks;
  const bool body = all || noise == NoiseProfile::kBodyClicks;
  const bool retype = all || noise == NoiseProfile::kRetype;
  const bool focus = all || noise == NoiseProfile::kFocusClicks;

  // Noise events are recorded but not executed: the demonstrator's page
  // follows the oracle solution.
  auto trace = record_oracle_episode(task, seed, ref_mode);
  Rng rng(mix_seed(seed, fnv1a(task) ^ 0xde5105ULL));
  RawDemonstration d;
  d.id = task + "-" + std::to_string(seed);
  d.task = task;
  d.utterance = trace.empty() ? std::string() : trace.front().utterance;
  std::int64_t t = 0;
  auto emit = [&](EventType type, int ref, std::string key, const DomSnapshot& snap) {
    t += 60 + static_cast<std::int64_t>(uniform_index(rng, 120));
    d.events.push_back({type, ref, std::move(key), t});
    d.snapshots.push_back(snap);
  };
  auto type_word = [&](int ref, const std::string& word, const DomSnapshot& snap) {
    for (char c : word) emit(EventType::kKeydown, ref, std::string(1, c), snap);
  };
  const std::vector<std::string> decoys = {"qwerty", "asdf", "typo", "oops"};
  bool duplicated = false;  // the first click is always doubled under dup noise
  for (const TraceRecord& r : trace) {
    const DomSnapshot snap(r.dom);
    if (body && uniform_real(rng) < 0.3) emit(EventType::kClick, snap.root().ref, {}, snap);
    if (r.action.is_click()) {
      emit(EventType::kClick, r.action.ref, {}, snap);
      if (dup && (!duplicated || uniform_real(rng) < 0.5)) {
        emit(EventType::kClick, r.action.ref, {}, snap);
        duplicated = true;
      }
      continue;
    }
    if (focus) emit(EventType::kClick, r.action.ref, {}, snap);
    if (retype && uniform_real(rng) < 0.5) {
      type_word(r.action.ref, pick(decoys, rng), snap);
      emit(EventType::kClick, r.action.ref, {}, snap);
    }
    type_word(r.action.ref, r.action.text, snap);
  }
  return d;
}

}  // namespace webnav
