#pragma once
// Supervised (behavioral cloning) and V-MPO training, and the alternating
// offline/online schedule.

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "webnav/agent.hpp"

namespace webnav {

struct RlConfig {
  double learning_rate = 1e-4;
  double adam_b1 = 0.9;
  double adam_b2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.1;  // decoupled, biases excluded
  double vmpo_alpha = 0.1;
  double vmpo_eta = 0.2;
  double gamma = 0.9;
  int batch_size_sl = 120;
  int unroll_length = 64;
  int target_update_period = 5;
  int max_steps_per_episode = 10;

  double sl_learning_rate = 1e-3;
  bool learned_multipliers = false;
  double eps_eta = 0.1;
  double eps_alpha = 0.01;
  double multiplier_learning_rate = 0.01;
  bool freeze_encoder_in_rl = false;
  std::size_t success_buffer_capacity = 2000;
  std::uint64_t seed = 0;

  // Throws ConfigError when an invariant is violated.
  void validate() const;
};

// Flat key=value text; '#' starts a comment. Unknown keys are errors.
RlConfig parse_config(const std::string& text);
std::string config_to_text(const RlConfig& c);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;
};

// Adam with bias correction plus decoupled weight decay on non-bias
// tensors. `frozen` tensors are left untouched.
void adam_step(PolicyParams& params, std::span<const double> grad, const RlConfig& config, double learning_rate,
               AdamState& state, std::span<const Tensor> frozen = {});

// ---------------------------------------------------------------------------
// Behavioral cloning

struct TrainingExample {
  FeatureVector features;
  Target target;
};

struct ExampleSet {
  std::vector<TrainingExample> examples;
  std::size_t rejected = 0;  // typing targets that do not fit the keydown grid
};

// Features are computed against the aligned plan subtask (or the whole
// utterance when `use_plan` is false or no rule exists).
ExampleSet build_bc_examples(const std::vector<ProcessedEpisode>& episodes, const Vocabulary& vocab,
                             bool use_plan = true, Ablation ablation = Ablation::kNone);

struct BcResult {
  std::vector<double> loss_curve;  // mean batch loss per optimizer step
  std::size_t examples_per_step = 0;
};

// `steps` optimizer steps over epoch-shuffled mini-batches of
// config.batch_size_sl examples.
BcResult train_bc(PolicyParams& params, const std::vector<TrainingExample>& examples, const Vocabulary& vocab,
                  const RlConfig& config, int steps, std::uint64_t seed);

// Mean supervised loss and its gradient over `examples`.
double batch_ce_loss(const PolicyParams& params, std::span<const TrainingExample* const> examples,
                     const Vocabulary& vocab, std::vector<double>* grad);

// ---------------------------------------------------------------------------
// V-MPO

std::vector<double> compute_returns(std::span<const double> rewards, double gamma);

struct TrajectoryStep {
  FeatureVector features;
  DomSnapshot snapshot;
  SampledAction action;
  double log_prob = 0.0;  // at collection time
  double reward = 0.0;
  bool terminated = false;
  double ret = 0.0;       // discounted return, filled at collection
};

struct Trajectory {
  std::string task;
  std::uint64_t seed = 0;
  std::string utterance;
  std::vector<TrajectoryStep> steps;
  double reward = 0.0;
  bool success = false;
};

struct VmpoBatch {
  std::vector<double> advantages;
  std::vector<std::size_t> selected;
  std::vector<double> psi_weights;
  double eta = 0.0;
  double alpha = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double kl = 0.0;
  double total_loss = 0.0;
};

// Top ceil(n/2) advantages (ties by index) and their exp(A/eta) weights.
// Throws ConfigError for eta <= 0.
void select_top_half(std::span<const double> advantages, double eta, std::vector<std::size_t>& selected,
                     std::vector<double>& psi);

// Total loss with the weights of `batch` held fixed; `grad` receives its
// gradient with respect to `params` when non-null.
double vmpo_loss(const PolicyParams& params, const PolicyParams& target_params,
                 std::span<const TrajectoryStep* const> steps, VmpoBatch& batch, std::vector<double>* grad);

struct VmpoLearner {
  PolicyParams target;
  AdamState adam;
  std::int64_t updates = 0;
  double eta = 0.2;
  double alpha = 0.1;
  std::vector<std::int64_t> target_sync_updates;  // update counts at which target <- params
};

VmpoLearner make_learner(const PolicyParams& params, const RlConfig& config);

// One learner step on `steps`: advantages from the value head, top-half
// selection, Adam on the total loss, target sync every
// config.target_update_period updates.
VmpoBatch vmpo_update(PolicyParams& params, VmpoLearner& learner, std::span<const TrajectoryStep* const> steps,
                      const RlConfig& config);

// Samples one hierarchical episode from the policy.
Trajectory collect_episode(const PolicyParams& params, const Vocabulary& vocab, const std::string& task,
                           std::uint64_t seed, RefMode ref_mode, const RlConfig& config, Rng& rng);

ProcessedEpisode trajectory_to_episode(const Trajectory& t);

class SuccessBuffer {
 public:
  explicit SuccessBuffer(std::size_t capacity) : capacity_(capacity) {}
  // Admits only positive-reward episodes; evicts the oldest at capacity.
  bool admit(ProcessedEpisode episode, double reward);
  const std::deque<ProcessedEpisode>& contents() const { return items_; }
  std::size_t size() const { return items_.size(); }

 private:
  std::size_t capacity_;
  std::deque<ProcessedEpisode> items_;
};

// ---------------------------------------------------------------------------
// Alternating schedule

struct Phase {
  int offline_steps = 0;
  int online_episodes = 0;
};

struct PhaseMetrics {
  int phase = 0;
  std::string kind;  // "offline" | "online"
  int steps = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  std::size_t dataset_size = 0;
  std::size_t buffer_size = 0;
};

struct AlternatingOptions {
  std::vector<std::string> tasks;
  RefMode ref_mode = RefMode::kOrdered;
  int eval_episodes = 100;
  std::uint64_t eval_seed = 0;
  std::uint64_t online_seed = 1'000'000;
  bool evaluate = true;
};

struct AlternatingResult {
  std::vector<PhaseMetrics> metrics;
  SuccessBuffer buffer{0};
};

AlternatingResult run_alternating(PolicyParams& params, const Vocabulary& vocab,
                                  const std::vector<ProcessedEpisode>& demos, const RlConfig& config,
                                  const std::vector<Phase>& schedule, const AlternatingOptions& options);

std::string metrics_to_csv(const std::vector<PhaseMetrics>& metrics);

}  // namespace webnav
