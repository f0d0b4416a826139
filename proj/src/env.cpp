#include "webnav/env.hpp"

#include <set>

#include "tasks_internal.hpp"
#include "webnav/util.hpp"

namespace webnav {

using nlohmann::json;

std::string to_string(const Action& a) {
  if (a.is_click()) return "click ref " + std::to_string(a.ref);
  return "type_text ref " + std::to_string(a.ref) + " " + a.text;
}

json action_to_json(const Action& a) {
  return {{"kind", a.is_click() ? "click" : "type_text"}, {"ref", a.ref}, {"text", a.text}};
}

Action action_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected object");
  if (!j.contains("kind") || !j["kind"].is_string()) throw ParseError(where + ".kind: missing");
  if (!j.contains("ref") || !j["ref"].is_number_integer()) throw ParseError(where + ".ref: missing");
  Action a;
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "click") a.kind = ActionKind::kClick;
  else if (kind == "type_text") a.kind = ActionKind::kTypeText;
  else throw ParseError(where + ".kind: unknown kind '" + kind + "'");
  a.ref = j["ref"].get<int>();
  if (a.ref < 1 || a.ref > kMaxRefs) throw ParseError(where + ".ref: out of range");
  if (j.contains("text")) {
    if (!j["text"].is_string()) throw ParseError(where + ".text: expected string");
    a.text = j["text"].get<std::string>();
  }
  if (a.is_click() && !a.text.empty()) throw ParseError(where + ".text: click carries text");
  return a;
}

std::pair<EnvState, Observation> reset(const std::string& task, std::uint64_t seed,
                                       RefMode ref_mode, int max_steps) {
  if (!is_registered_task(task)) throw UnknownTaskError("unknown task '" + task + "'");
  Rng rng(mix_seed(seed, fnv1a(task)));
  detail::Instance inst = detail::build_instance(task, rng);
  EnvState s;
  s.task = {task, seed};
  s.ref_mode = ref_mode;
  s.utterance = std::move(inst.utterance);
  s.goal = std::move(inst.goal);
  s.max_steps = max_steps;
  s.snapshot = assign_refs(std::move(inst.page), ref_mode, mix_seed(seed, fnv1a(task) ^ 0x5eed));
  Observation obs = s.observe();
  return {std::move(s), std::move(obs)};
}

double discounted_reward(double raw_reward, int steps_used, int max_steps) {
  if (raw_reward > 0) {
    return raw_reward * (1.0 - static_cast<double>(steps_used) / static_cast<double>(max_steps));
  }
  return raw_reward;
}

StepResult step(EnvState& s, const Action& action) {
  if (s.terminated) throw ContractError("step called on a terminated episode");
  if (s.steps_used >= s.max_steps) throw ContractError("step budget already exhausted");
  ++s.steps_used;
  detail::Outcome outcome = detail::Outcome::kNone;
  auto it = s.snapshot.ref_index().find(action.ref);
  if (it != s.snapshot.ref_index().end()) {
    DomNode page = s.snapshot.root();
    outcome = detail::apply_action(s, page, it->second, action);
    s.snapshot = DomSnapshot(std::move(page));
  }
  if (outcome == detail::Outcome::kSuccess) {
    s.terminated = true;
    s.raw_reward = 1.0;
  } else if (outcome == detail::Outcome::kFailure || s.steps_used >= s.max_steps) {
    s.terminated = true;
    s.raw_reward = -1.0;
  }
  StepResult r;
  r.observation = s.observe();
  r.terminated = s.terminated;
  r.reward = s.terminated ? discounted_reward(s.raw_reward, s.steps_used, s.max_steps) : 0.0;
  return r;
}

EnvState relabel(const EnvState& state, const RefPermutation& perm) {
  EnvState out = state;
  out.snapshot = permute_refs(state.snapshot, perm);
  return out;
}

Action relabel(const Action& a, const RefPermutation& perm) {
  Action out = a;
  if (perm.mapping().count(a.ref)) out.ref = perm.apply(a.ref);
  return out;
}

Action oracle_policy(const TaskSpec&, const EnvState& state) {
  auto script = oracle_script(state);
  if (script.empty()) throw ContractError("oracle has no action for this state");
  return script.front().action;
}

int oracle_phase_count(const EnvState& fresh_state) {
  std::set<int> phases;
  for (const auto& sa : oracle_script(fresh_state)) phases.insert(sa.phase);
  return static_cast<int>(phases.size());
}

json trace_to_json(const TraceRecord& r) {
  return {{"task", r.task},         {"seed", r.seed},
          {"step", r.step},         {"utterance", r.utterance},
          {"action", action_to_json(r.action)}, {"reward", r.reward},
          {"terminated", r.terminated}, {"dom", dom_to_json(r.dom)}};
}

TraceRecord trace_from_json(const json& j) {
  TraceRecord r;
  try {
    r.task = j.at("task").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.step = j.at("step").get<int>();
    r.utterance = j.value("utterance", std::string());
    r.reward = j.at("reward").get<double>();
    r.terminated = j.at("terminated").get<bool>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("trace record: ") + e.what());
  }
  r.action = action_from_json(j.at("action"));
  r.dom = dom_from_json(j.at("dom"));
  return r;
}

std::vector<TraceRecord> record_oracle_episode(const std::string& task, std::uint64_t seed,
                                               RefMode ref_mode) {
  auto [state, obs] = reset(task, seed, ref_mode);
  std::vector<TraceRecord> out;
  while (!state.terminated) {
    TraceRecord rec;
    rec.task = task;
    rec.seed = seed;
    rec.step = state.steps_used;
    rec.utterance = state.utterance;
    rec.dom = state.snapshot.root();
    rec.action = oracle_policy(state.task, state);
    StepResult res = step(state, rec.action);
    rec.reward = res.reward;
    rec.terminated = res.terminated;
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace webnav
