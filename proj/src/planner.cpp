#include "webnav/planner.hpp"

#include <algorithm>
#include <map>

#include "webnav/util.hpp"

namespace webnav {

using nlohmann::json;

namespace {

enum class RuleKind { kConnective, kList, kKeyValue };

struct Rule {
  RuleKind kind;
  std::string list_prefix;  // kList
};

const std::map<std::string, Rule>& rules() {
  static const std::map<std::string, Rule> r = {
      {"click-button", {RuleKind::kConnective, {}}},
      {"enter-text", {RuleKind::kConnective, {}}},
      {"click-collapsible", {RuleKind::kConnective, {}}},
      {"choose-color", {RuleKind::kConnective, {}}},
      {"use-spinner", {RuleKind::kConnective, {}}},
      {"click-checkboxes", {RuleKind::kList, "Select"}},
      {"click-checkboxes-soft", {RuleKind::kList, "Select words similar to"}},
      {"book-flight-simplified", {RuleKind::kKeyValue, {}}},
  };
  return r;
}

struct FieldFormat {
  std::string key;
  std::string prefix;
};

// Field order and phrasing of the flight form.
const std::vector<FieldFormat>& flight_fields() {
  static const std::vector<FieldFormat> f = {
      {"Departure City", "Select Departure City "},
      {"Destination City", "Select Destination City "},
      {"Departure Day", "Select the Departure Day to "},
  };
  return f;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\n");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\n");
  return s.substr(b, e - b + 1);
}

std::string strip_trailing_punct(std::string s) {
  s = trim(s);
  while (!s.empty() && (s.back() == '.' || s.back() == ';' || s.back() == '!' || s.back() == '?' ||
                        s.back() == ',')) {
    s.pop_back();
  }
  return trim(s);
}

std::vector<std::string> split_on(const std::string& s, const std::string& sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t pos; (pos = s.find(sep, start)) != std::string::npos; start = pos + sep.size()) {
    out.push_back(s.substr(start, pos - start));
  }
  out.push_back(s.substr(start));
  return out;
}

Plan translate_key_value(const std::string& utterance) {
  json j;
  try {
    j = json::parse(utterance);
  } catch (const json::parse_error&) {
    throw TranslationError("expected a key-value utterance: " + utterance);
  }
  if (!j.is_object()) throw TranslationError("expected a key-value object: " + utterance);
  Plan p;
  for (const FieldFormat& f : flight_fields()) {
    if (!j.contains(f.key)) continue;
    const json& v = j[f.key];
    std::string value;
    if (v.is_string()) value = v.get<std::string>();
    else if (v.is_number_integer()) value = std::to_string(v.get<long long>());
    else throw TranslationError("field '" + f.key + "' has an unsupported value");
    p.subtasks.push_back(f.prefix + value);
  }
  if (p.subtasks.empty()) throw TranslationError("no known fields in: " + utterance);
  return p;
}

Plan translate_list(const std::string& utterance, const std::string& prefix) {
  auto clauses = split_clauses(utterance);
  if (clauses.empty() || clauses[0].rfind(prefix + " ", 0) != 0) {
    throw TranslationError("expected '" + prefix + " ...' in: " + utterance);
  }
  Plan p;
  for (const std::string& item : split_on(clauses[0].substr(prefix.size() + 1), ", ")) {
    const std::string w = trim(item);
    if (w.empty()) throw TranslationError("empty list item in: " + utterance);
    p.subtasks.push_back(prefix + " " + w);
  }
  for (std::size_t i = 1; i < clauses.size(); ++i) p.subtasks.push_back(clauses[i]);
  return p;
}

const DomNode* target_node(const EpisodeStep& s) { return s.snapshot.find(s.action.ref); }

}  // namespace

std::vector<std::string> split_clauses(const std::string& utterance) {
  static const std::vector<std::string> connectives = {" and then ", ", and ", " and ", "; "};
  std::vector<std::string> parts = {utterance};
  for (const std::string& c : connectives) {
    std::vector<std::string> next;
    for (const std::string& p : parts) {
      for (std::string& piece : split_on(p, c)) next.push_back(std::move(piece));
    }
    parts = std::move(next);
  }
  std::vector<std::string> out;
  for (const std::string& p : parts) {
    std::string clause = strip_trailing_punct(p);
    if (!clause.empty()) out.push_back(std::move(clause));
  }
  return out;
}

bool has_translation_rule(const std::string& task) { return rules().count(task) != 0; }

Plan translate_utterance(const std::string& task, const std::string& utterance) {
  auto it = rules().find(task);
  if (it == rules().end()) throw NoRuleError("no translation rule for task '" + task + "'");
  Plan p;
  switch (it->second.kind) {
    case RuleKind::kKeyValue:
      return translate_key_value(utterance);
    case RuleKind::kList:
      return translate_list(utterance, it->second.list_prefix);
    case RuleKind::kConnective:
      p.subtasks = split_clauses(utterance);
      break;
  }
  if (p.subtasks.empty()) throw TranslationError("nothing to translate in '" + utterance + "'");
  return p;
}

PlanDataset derive_plan_dataset(const std::vector<ProcessedEpisode>& episodes) {
  PlanDataset out;
  for (const auto& e : episodes) {
    if (!has_translation_rule(e.task)) {
      ++out.dropped;
      continue;
    }
    try {
      out.examples.push_back({e.task, e.utterance, translate_utterance(e.task, e.utterance)});
    } catch (const TranslationError&) {
      ++out.dropped;
    }
  }
  return out;
}

std::string plan_to_string(const Plan& plan) {
  std::string out;
  for (const std::string& s : plan.subtasks) {
    if (!out.empty()) out += ' ';
    out += s + ";";
  }
  return out;
}

json plan_example_to_json(const PlanExample& e) {
  return {{"task", e.task}, {"utterance", e.utterance}, {"subtasks", e.plan.subtasks}};
}

std::vector<int> align_plan(const ProcessedEpisode& episode, const Plan& plan) {
  const int last = static_cast<int>(plan.subtasks.size()) - 1;
  std::vector<int> out;
  int current = 0;
  auto rules_it = rules().find(episode.task);
  const RuleKind kind = rules_it == rules().end() ? RuleKind::kConnective : rules_it->second.kind;

  for (const EpisodeStep& s : episode.steps) {
    const DomNode* node = target_node(s);
    const DomNode* parent = s.snapshot.parent_of(s.action.ref);
    int idx = current;
    if (node && node->attr("id") == "submit") {
      idx = last;
    } else if (kind == RuleKind::kList && node) {
      // The checkbox's word lives on its label.
      const std::string word = node->attr("class") == "checkbox" && parent ? parent->text : node->text;
      for (int i = 0; i <= last; ++i) {
        auto tokens = tokenize(plan.subtasks[static_cast<std::size_t>(i)]);
        const std::string cue = tokens.empty() ? std::string() : tokens.back();
        const auto word_tokens = tokenize(word);
        bool match = !word_tokens.empty() && cue == word_tokens.front();
        if (!match && episode.task == "click-checkboxes-soft") {
          for (const auto& g : synonym_groups()) {
            if (g[0] == cue && std::find(g.begin(), g.end(), word) != g.end()) match = true;
          }
        }
        if (match) {
          idx = i;
          break;
        }
      }
    } else if (kind == RuleKind::kKeyValue && node && parent && node->tag == "option") {
      const std::string sel = parent->attr("id");
      const std::vector<std::string> ids = {"departure-city", "destination-city", "departure-day"};
      for (std::size_t f = 0; f < ids.size(); ++f) {
        if (sel == ids[f]) idx = static_cast<int>(f);
      }
    } else if (kind == RuleKind::kConnective) {
      idx = 0;
    }
    idx = std::clamp(idx, 0, last);
    out.push_back(idx);
    current = idx;
  }
  return out;
}

std::vector<bool> subtask_done_targets(const std::vector<int>& alignment) {
  std::vector<bool> out(alignment.size(), false);
  for (std::size_t i = 0; i < alignment.size(); ++i) {
    out[i] = i + 1 == alignment.size() || alignment[i + 1] != alignment[i];
  }
  return out;
}

PolicyDecision OraclePolicy::act(const PolicyQuery& q) {
  auto script = oracle_script(q.env);
  if (script.empty()) throw ContractError("oracle policy queried on a finished episode");
  const bool done = script.size() == 1 || script[1].phase != script[0].phase;
  return {script.front().action, done};
}

EpisodeResult hierarchical_rollout(EnvState& env, AgentPolicy& policy, const Plan& plan,
                                   int per_subtask_budget) {
  if (plan.subtasks.empty()) throw ContractError("hierarchical_rollout: empty plan");
  EpisodeResult result;
  Observation obs = env.observe();
  for (const std::string& subtask : plan.subtasks) {
    result.subtask_trace.emplace_back();
    for (int n = 0; n < per_subtask_budget && !env.terminated; ++n) {
      PolicyDecision d = policy.act({env, obs, result.actions, subtask});
      StepResult r = step(env, d.action);
      result.actions.push_back(d.action);
      result.subtask_trace.back().push_back(d.action);
      obs = std::move(r.observation);
      if (r.terminated) result.reward = r.reward;
      if (d.subtask_done) break;
    }
    if (env.terminated) break;
  }
  result.terminated = env.terminated;
  result.raw_reward = env.terminated ? env.raw_reward : 0.0;
  result.success = env.terminated && env.raw_reward > 0;
  return result;
}

}  // namespace webnav
