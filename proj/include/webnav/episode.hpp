#pragma once
// Recorded demonstrations, the cleaning pipeline that turns raw event
// streams into (snapshot, action) episodes, and dataset bookkeeping.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "webnav/dom.hpp"
#include "webnav/env.hpp"

namespace webnav {

enum class EventType { kClick, kKeydown };

struct RawEvent {
  EventType type = EventType::kClick;
  int ref = 0;
  std::string key;  // keydown only: one character or a control key name
  std::int64_t timestamp = 0;
  friend bool operator==(const RawEvent&, const RawEvent&) = default;
};

struct RawDemonstration {
  std::string id;
  std::string task;
  std::string utterance;
  std::vector<RawEvent> events;
  std::vector<DomSnapshot> snapshots;  // observed before each event
  friend bool operator==(const RawDemonstration&, const RawDemonstration&) = default;
};

struct EpisodeStep {
  DomSnapshot snapshot;
  Action action;
  friend bool operator==(const EpisodeStep&, const EpisodeStep&) = default;
};

struct ProcessedEpisode {
  std::string id;
  std::string task;
  std::string utterance;
  std::vector<EpisodeStep> steps;
  friend bool operator==(const ProcessedEpisode&, const ProcessedEpisode&) = default;
};

nlohmann::json demonstration_to_json(const RawDemonstration& d);
// Throws ParseError naming the offending field.
RawDemonstration parse_demonstration(const std::string& json_text);
RawDemonstration demonstration_from_json(const nlohmann::json& j);

nlohmann::json episode_to_json(const ProcessedEpisode& e);
ProcessedEpisode episode_from_json(const nlohmann::json& j);

std::vector<RawDemonstration> read_demonstrations(const std::string& path);
std::vector<ProcessedEpisode> read_episodes(const std::string& path);
std::string episodes_to_jsonl(const std::vector<ProcessedEpisode>& episodes);

// Drops body clicks, merges keydown runs into typing actions, keeps the last
// typing action per element and the last copy of each repeated action.
ProcessedEpisode clean_actions(const RawDemonstration& raw);

// Inverse view of an episode as an event stream (typing expands to one
// keydown per character).
RawDemonstration rewrap(const ProcessedEpisode& episode);

// Builds a demonstration from an exported env trace.
RawDemonstration demonstration_from_trace(const std::vector<TraceRecord>& trace,
                                          const std::string& id = {});

// Per-episode manual fixes: {"<episode id>": [{"index": i, "action": {...}}
// | {"index": i, "delete": true}, ...]}.
using PatchSet = std::map<std::string, nlohmann::json>;
PatchSet parse_patches(const std::string& json_text);
std::vector<ProcessedEpisode> apply_patches(std::vector<ProcessedEpisode> episodes,
                                            const PatchSet& patches);

std::vector<ProcessedEpisode> downsample(const std::vector<ProcessedEpisode>& dataset,
                                         std::size_t cap, std::uint64_t seed);

struct DatasetStats {
  std::map<std::string, std::size_t> per_task_counts;
  double mean_per_task = 0.0;
};
DatasetStats dataset_stats(const std::vector<ProcessedEpisode>& dataset);
std::string stats_to_csv(const DatasetStats& stats);

// Histogram of target refs over every action of every episode.
std::map<int, std::size_t> ref_distribution(const std::vector<ProcessedEpisode>& episodes);

// Synthetic stand-in for human recordings: an oracle run with injected noise.
enum class NoiseProfile { kNone, kDupClicks, kBodyClicks, kRetype, kFocusClicks, kAll };
NoiseProfile parse_noise_profile(const std::string& name);
std::string to_string(NoiseProfile p);

RawDemonstration generate_demonstration(const std::string& task, std::uint64_t seed,
                                        RefMode ref_mode, NoiseProfile noise);

}  // namespace webnav
