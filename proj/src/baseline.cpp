#include <map>
#include <tuple>

#include "webnav/agent.hpp"

namespace webnav {

MemorizingBaseline memorizing_baseline_fit(const std::vector<ProcessedEpisode>& dataset) {
  std::map<std::string, std::vector<std::map<Action, std::size_t>>> counts;
  for (const auto& e : dataset) {
    auto& per_step = counts[e.task];
    if (per_step.size() < e.steps.size()) per_step.resize(e.steps.size());
    for (std::size_t i = 0; i < e.steps.size(); ++i) ++per_step[i][e.steps[i].action];
  }
  MemorizingBaseline b;
  for (const auto& [task, per_step] : counts) {
    auto& row = b.table_[task];
    for (const auto& tally : per_step) {
      // Ties go to the lower ref, then clicks before typing.
      const Action* best = nullptr;
      std::size_t best_n = 0;
      for (const auto& [action, n] : tally) {
        const bool tie_wins = best && n == best_n &&
                              std::tie(action.ref, action.kind, action.text) <
                                  std::tie(best->ref, best->kind, best->text);
        if (n > best_n || tie_wins) {
          best = &action;
          best_n = n;
        }
      }
      row.push_back(*best);
    }
  }
  return b;
}

std::optional<Action> MemorizingBaseline::predict(const std::string& task, std::size_t step_index) const {
  auto it = table_.find(task);
  if (it == table_.end() || it->second.empty()) return std::nullopt;
  const auto& row = it->second;
  return row[std::min(step_index, row.size() - 1)];
}

PolicyDecision MemorizingBaseline::act(const PolicyQuery& q) {
  auto a = predict(q.env.task.name, q.history.size());
  return {a.value_or(Action::click(1)), false};
}

}  // namespace webnav
