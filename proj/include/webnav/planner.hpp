#pragma once
// Rule-based utterance-to-subtask translation and the hierarchical
// execution loop that drives a policy through a plan.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "webnav/env.hpp"
#include "webnav/episode.hpp"

namespace webnav {

struct Plan {
  std::vector<std::string> subtasks;
  friend bool operator==(const Plan&, const Plan&) = default;
};

// "a; b; c;" rendering of a plan.
std::string plan_to_string(const Plan& plan);

struct PlanExample {
  std::string task;
  std::string utterance;
  Plan plan;
};

// Throws NoRuleError for tasks without a rule and TranslationError when the
// utterance does not fit the task's rule.
Plan translate_utterance(const std::string& task, const std::string& utterance);
bool has_translation_rule(const std::string& task);

// Splits on "; ", " and then ", ", and ", " and " (longest first) and strips
// trailing punctuation from each clause.
std::vector<std::string> split_clauses(const std::string& utterance);

struct PlanDataset {
  std::vector<PlanExample> examples;
  std::size_t dropped = 0;
};
PlanDataset derive_plan_dataset(const std::vector<ProcessedEpisode>& episodes);

nlohmann::json plan_example_to_json(const PlanExample& e);

// Subtask index for every step of `episode`, produced by the same per-task
// rule that generated `plan`. Indices are clamped to the plan size.
std::vector<int> align_plan(const ProcessedEpisode& episode, const Plan& plan);
// Done-flag targets: 1 on the last step of each aligned span.
std::vector<bool> subtask_done_targets(const std::vector<int>& alignment);

struct PolicyQuery {
  const EnvState& env;  // learned policies read only env.observe()
  const Observation& observation;
  const std::vector<Action>& history;
  const std::string& subtask;
};

struct PolicyDecision {
  Action action;
  bool subtask_done = false;
};

class AgentPolicy {
 public:
  virtual ~AgentPolicy() = default;
  virtual PolicyDecision act(const PolicyQuery& q) = 0;
};

// Replays the scripted solution; signals done on the last action of each
// oracle phase.
class OraclePolicy : public AgentPolicy {
 public:
  PolicyDecision act(const PolicyQuery& q) override;
};

struct EpisodeResult {
  double reward = 0.0;
  double raw_reward = 0.0;
  bool success = false;
  bool terminated = false;
  std::vector<Action> actions;
  std::vector<std::vector<Action>> subtask_trace;
};

// Runs the subtasks of `plan` in order; each gets up to `per_subtask_budget`
// actions and ends early when the policy flags it done. Stops as soon as
// the environment terminates.
EpisodeResult hierarchical_rollout(EnvState& env, AgentPolicy& policy, const Plan& plan,
                                   int per_subtask_budget);

}  // namespace webnav
