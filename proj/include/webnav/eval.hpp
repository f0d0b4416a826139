#pragma once
// Accuracy benchmarking, ROUGE, the ref-randomization attack, ablations and
// report files.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "webnav/agent.hpp"
#include "webnav/trainer.hpp"

namespace webnav {

struct EvalReport {
  std::string label;  // policy id
  RefMode ref_mode = RefMode::kOrdered;
  Ablation ablation = Ablation::kNone;
  std::map<std::string, double> per_task_accuracy;
  double average = 0.0;
  int episodes_per_task = 0;
  std::vector<std::uint64_t> seeds;  // seed .. seed+episodes-1, shared by every task

  std::string condition() const;
};

// Seeds seed..seed+episodes-1 per task. Under kNoPlan the whole utterance is
// the only subtask. Success means a positive raw terminal reward.
EvalReport evaluate_accuracy(AgentPolicy& policy, const std::vector<std::string>& tasks, int episodes_per_task,
                             std::uint64_t seed, RefMode ref_mode, Ablation ablation, const std::string& label);

struct RougeScores {
  double rouge1_f1 = 0.0;
  double rougeL_f1 = 0.0;
};
RougeScores rouge_scores(const std::vector<std::string>& candidate, const std::vector<std::string>& reference);

// Clean oracle episodes for `tasks`, `per_task` instances each starting at `seed`.
std::vector<ProcessedEpisode> oracle_dataset(const std::vector<std::string>& tasks, int per_task,
                                             std::uint64_t seed, RefMode ref_mode);

struct AttackReport {
  std::string policy;  // "baseline" | "tiny"
  RefMode trained_on = RefMode::kOrdered;
  double accuracy_ordered_test = 0.0;
  double accuracy_randomized_test = 0.0;
  double drop = 0.0;
};

struct AttackConfig {
  std::vector<std::string> tasks;
  int bc_steps = 400;
  int eval_episodes = 100;
  std::uint64_t eval_seed = 500'000;
  std::uint64_t seed = 0;
  RlConfig rl;
};

// Baseline and tiny policy, each trained on the ordered and the randomized
// dataset and tested in both ref modes on the same seeds. Four reports.
std::vector<AttackReport> run_ref_attack(const std::vector<ProcessedEpisode>& ordered_train,
                                         const std::vector<ProcessedEpisode>& randomized_train,
                                         const AttackConfig& config);
nlohmann::json attack_to_json(const std::vector<AttackReport>& reports);

using PolicyFactory = std::function<std::unique_ptr<AgentPolicy>(Ablation)>;

// kNone always runs first; the other modes follow in the given order.
std::vector<EvalReport> run_ablation(const PolicyFactory& make_policy, const std::vector<Ablation>& modes,
                                     const std::vector<std::string>& tasks, int episodes_per_task,
                                     std::uint64_t seed, RefMode ref_mode, const std::string& label);

std::string reports_to_csv(const std::vector<EvalReport>& reports);
std::string reports_to_table(const std::vector<EvalReport>& reports);
// Writes `<csv_path>` and the table next to it; throws IoError.
void emit_report(const std::vector<EvalReport>& reports, const std::string& csv_path,
                 const std::string& table_path);

}  // namespace webnav
