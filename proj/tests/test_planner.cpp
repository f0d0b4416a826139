#include <gtest/gtest.h>

#include "webnav/eval.hpp"
#include "webnav/planner.hpp"

using namespace webnav;

namespace {

// Gives up on the first subtask and never flags it done.
class StuckPolicy : public AgentPolicy {
 public:
  PolicyDecision act(const PolicyQuery&) override { return {Action::click(kMaxRefs), false}; }
};

}  // namespace

TEST(Planner, FlightExample) {
  const std::string u =
      R"({"Departure City":"Philadelphia","Destination City":"Charlotte","Ticket Type":"Return flight","Departure Day":4,"Returning Day":26,"Passengers":2})";
  const Plan p = translate_utterance("book-flight-simplified", u);
  EXPECT_EQ(p.subtasks, (std::vector<std::string>{"Select Departure City Philadelphia", "Select Destination City Charlotte",
                                                  "Select the Departure Day to 4"}));
  EXPECT_EQ(plan_to_string(p),
            "Select Departure City Philadelphia; Select Destination City Charlotte; Select the Departure Day to 4;");
}

TEST(Planner, CollapsibleExample) {
  const Plan p = translate_utterance("click-collapsible", "Expand the section below and click submit.");
  EXPECT_EQ(plan_to_string(p), "Expand the section below; click submit;");
}

TEST(Planner, SingleClause) {
  EXPECT_EQ(translate_utterance("click-button", "Click the submit button.").subtasks,
            (std::vector<std::string>{"Click the submit button"}));
}

TEST(Planner, Connectives) {
  EXPECT_EQ(split_clauses("a and then b; c, and d and e."), (std::vector<std::string>{"a", "b", "c", "d", "e"}));
}

TEST(Planner, ListRule) {
  EXPECT_EQ(translate_utterance("click-checkboxes", "Select peach, drums and click Submit.").subtasks,
            (std::vector<std::string>{"Select peach", "Select drums", "click Submit"}));
}

TEST(Planner, Errors) {
  EXPECT_THROW(translate_utterance("login-user", "Log in."), NoRuleError);
  EXPECT_THROW(translate_utterance("book-flight-simplified", "not json"), TranslationError);
  EXPECT_THROW(translate_utterance("click-button", "  "), TranslationError);
}

TEST(Planner, DatasetDropsUnruledTasks) {
  std::vector<ProcessedEpisode> eps = oracle_dataset({"click-button"}, 8, 0, RefMode::kOrdered);
  for (int i = 0; i < 2; ++i) {
    ProcessedEpisode e;
    e.id = "x" + std::to_string(i);
    e.task = "email-inbox";
    e.utterance = "Forward the email.";
    eps.push_back(e);
  }
  const PlanDataset ds = derive_plan_dataset(eps);
  EXPECT_EQ(ds.examples.size(), 8u);
  EXPECT_EQ(ds.dropped, 2u);
}

TEST(Planner, Deterministic) {
  for (const auto& task : task_registry()) {
    auto [env, obs] = reset(task, 2, RefMode::kOrdered);
    EXPECT_EQ(translate_utterance(task, env.utterance), translate_utterance(task, env.utterance));
  }
}

TEST(Planner, AlignmentMatchesOraclePhases) {
  for (const auto& task : task_registry()) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto [env, obs] = reset(task, seed, RefMode::kRandomized);
      const auto script = oracle_script(env);
      ProcessedEpisode ep;
      ep.task = task;
      ep.utterance = env.utterance;
      for (const auto& r : record_oracle_episode(task, seed, RefMode::kRandomized)) {
        ep.steps.push_back({DomSnapshot(r.dom), r.action});
      }
      const auto align = align_plan(ep, translate_utterance(task, ep.utterance));
      ASSERT_EQ(align.size(), script.size()) << task;
      for (std::size_t i = 0; i < align.size(); ++i) EXPECT_EQ(align[i], script[i].phase) << task << " " << seed;
    }
  }
}

TEST(Planner, DoneTargets) {
  EXPECT_EQ(subtask_done_targets({0, 0, 1, 2, 2}), (std::vector<bool>{false, true, true, false, true}));
  EXPECT_TRUE(subtask_done_targets({}).empty());
}

TEST(Rollout, OracleOnCollapsibleOneActionPerSubtask) {
  auto [env, obs] = reset("click-collapsible", 0, RefMode::kOrdered);
  OraclePolicy oracle;
  const EpisodeResult r = hierarchical_rollout(env, oracle, translate_utterance("click-collapsible", env.utterance), 10);
  EXPECT_TRUE(r.success);
  ASSERT_EQ(r.subtask_trace.size(), 2u);
  EXPECT_EQ(r.subtask_trace[0].size(), 1u);
  EXPECT_EQ(r.subtask_trace[1].size(), 1u);
}

TEST(Rollout, StuckPolicyExhaustsBudget) {
  auto [env, obs] = reset("enter-text", 0, RefMode::kOrdered);
  StuckPolicy p;
  const EpisodeResult r = hierarchical_rollout(env, p, translate_utterance("enter-text", env.utterance), 10);
  EXPECT_TRUE(r.terminated);
  EXPECT_EQ(r.reward, -1.0);
  EXPECT_EQ(r.actions.size(), 10u);
}

TEST(Rollout, TerminationSkipsRemainingSubtasks) {
  auto [env, obs] = reset("click-button", 0, RefMode::kOrdered);
  OraclePolicy oracle;
  const Plan plan{{env.utterance, "do more", "and more"}};
  const EpisodeResult r = hierarchical_rollout(env, oracle, plan, 10);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.actions.size(), 1u);
  EXPECT_EQ(r.subtask_trace.size(), 1u);
}

TEST(Rollout, TraceConcatenatesToActionsAndRespectsBudget) {
  for (const auto& task : task_registry()) {
    auto [env, obs] = reset(task, 1, RefMode::kOrdered);
    RandomClickPolicy p(3);
    Plan plan = translate_utterance(task, env.utterance);
    plan.subtasks.insert(plan.subtasks.end(), 5, "filler");
    const EpisodeResult r = hierarchical_rollout(env, p, plan, 10);
    std::vector<Action> flat;
    for (const auto& t : r.subtask_trace) flat.insert(flat.end(), t.begin(), t.end());
    EXPECT_EQ(flat, r.actions);
    EXPECT_LE(static_cast<int>(r.actions.size()), env.max_steps);
  }
}
