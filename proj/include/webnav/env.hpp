#pragma once
// Turn-based MiniWoB-style task simulator with a two-action interface.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "webnav/dom.hpp"

namespace webnav {

inline constexpr int kDefaultMaxSteps = 10;

enum class ActionKind { kClick, kTypeText };

struct Action {
  ActionKind kind = ActionKind::kClick;
  int ref = 0;
  std::string text;  // empty unless kind == kTypeText

  static Action click(int ref) { return {ActionKind::kClick, ref, {}}; }
  static Action type_text(int ref, std::string text) {
    return {ActionKind::kTypeText, ref, std::move(text)};
  }
  bool is_click() const { return kind == ActionKind::kClick; }
  friend bool operator==(const Action&, const Action&) = default;
  friend auto operator<=>(const Action&, const Action&) = default;
};

// "click ref 5" / "type_text ref 7 hello"
std::string to_string(const Action& a);
nlohmann::json action_to_json(const Action& a);
Action action_from_json(const nlohmann::json& j, const std::string& where = "action");

const std::vector<std::string>& task_registry();
bool is_registered_task(const std::string& name);

struct TaskSpec {
  std::string name;
  std::uint64_t seed = 0;
};

// Hidden per-instance goal. Tasks use the subset of fields they need.
struct Goal {
  std::vector<std::string> words;
  int number = 0;
  std::vector<std::pair<std::string, std::string>> fields;  // ordered
};

struct Observation {
  std::string utterance;
  DomSnapshot snapshot;
  RasterGrid raster;
};

struct EnvState {
  TaskSpec task;
  RefMode ref_mode = RefMode::kOrdered;
  std::string utterance;
  DomSnapshot snapshot;
  Goal goal;
  int steps_used = 0;
  int max_steps = kDefaultMaxSteps;
  bool terminated = false;
  double raw_reward = 0.0;

  Observation observe() const { return {utterance, snapshot, rasterize(snapshot)}; }
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool terminated = false;
};

// Throws UnknownTaskError for names outside the registry.
std::pair<EnvState, Observation> reset(const std::string& task, std::uint64_t seed,
                                       RefMode ref_mode, int max_steps = kDefaultMaxSteps);

// Mutates `state`. Stepping a terminated episode throws ContractError.
StepResult step(EnvState& state, const Action& action);

// Success reward decays linearly with the steps used; failures are -1.
double discounted_reward(double raw_reward, int steps_used, int max_steps);

// Same instance with every ref relabelled through `perm`.
EnvState relabel(const EnvState& state, const RefPermutation& perm);
Action relabel(const Action& a, const RefPermutation& perm);

struct ScriptedAction {
  Action action;
  int phase = 0;  // index of the subtask this action belongs to
};

// Remaining optimal actions from `state`, annotated with phases.
std::vector<ScriptedAction> oracle_script(const EnvState& state);
// First action of oracle_script.
Action oracle_policy(const TaskSpec& task, const EnvState& state);
// Number of distinct phases an oracle run of a fresh instance goes through.
int oracle_phase_count(const EnvState& fresh_state);

// Episode trace export: one JSON object per step.
struct TraceRecord {
  std::string task;
  std::uint64_t seed = 0;
  int step = 0;
  std::string utterance;
  Action action;
  double reward = 0.0;
  bool terminated = false;
  DomNode dom;  // page the action was taken on
};
nlohmann::json trace_to_json(const TraceRecord& r);
TraceRecord trace_from_json(const nlohmann::json& j);

// Runs the oracle to termination and records every step.
std::vector<TraceRecord> record_oracle_episode(const std::string& task, std::uint64_t seed,
                                               RefMode ref_mode);

// Every word the simulator can put in an utterance, label or typed value.
std::vector<std::string> simulator_lexicon();

// Synonym groups backing click-checkboxes-soft.
const std::vector<std::vector<std::string>>& synonym_groups();

}  // namespace webnav
