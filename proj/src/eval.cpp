#include "webnav/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace webnav {

std::string EvalReport::condition() const {
  return label + "/" + to_string(ref_mode) + "/" + to_string(ablation);
}

EvalReport evaluate_accuracy(AgentPolicy& policy, const std::vector<std::string>& tasks, int episodes_per_task,
                             std::uint64_t seed, RefMode ref_mode, Ablation ablation, const std::string& label) {
  EvalReport r;
  r.label = label;
  r.ref_mode = ref_mode;
  r.ablation = ablation;
  r.episodes_per_task = episodes_per_task;
  for (int i = 0; i < episodes_per_task; ++i) r.seeds.push_back(seed + static_cast<std::uint64_t>(i));
  for (const std::string& task : tasks) {
    if (!is_registered_task(task)) throw UnknownTaskError(task);
    int successes = 0;
    for (std::uint64_t s : r.seeds) {
      auto [env, obs] = reset(task, s, ref_mode);
      Plan plan{{env.utterance}};
      if (ablation != Ablation::kNoPlan && has_translation_rule(task)) plan = translate_utterance(task, env.utterance);
      if (hierarchical_rollout(env, policy, plan, env.max_steps).success) ++successes;
    }
    r.per_task_accuracy[task] = episodes_per_task > 0 ? static_cast<double>(successes) / episodes_per_task : 0.0;
  }
  double sum = 0.0;
  for (const auto& [task, acc] : r.per_task_accuracy) sum += acc;
  r.average = r.per_task_accuracy.empty() ? 0.0 : sum / static_cast<double>(r.per_task_accuracy.size());
  return r;
}

RougeScores rouge_scores(const std::vector<std::string>& candidate, const std::vector<std::string>& reference) {
  RougeScores s;
  if (candidate.empty() || reference.empty()) return s;
  auto f1 = [&](double overlap) {
    if (overlap == 0) return 0.0;
    const double p = overlap / static_cast<double>(candidate.size());
    const double r = overlap / static_cast<double>(reference.size());
    return 2 * p * r / (p + r);
  };
  std::map<std::string, int> ref_counts;
  for (const auto& t : reference) ++ref_counts[t];
  int overlap = 0;
  for (const auto& t : candidate) {
    auto it = ref_counts.find(t);
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  s.rouge1_f1 = f1(overlap);
  std::vector<int> prev(reference.size() + 1, 0), cur(reference.size() + 1, 0);
  for (const auto& c : candidate) {
    for (std::size_t j = 1; j <= reference.size(); ++j) {
      cur[j] = c == reference[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  s.rougeL_f1 = f1(prev[reference.size()]);
  return s;
}

std::vector<ProcessedEpisode> oracle_dataset(const std::vector<std::string>& tasks, int per_task,
                                             std::uint64_t seed, RefMode ref_mode) {
  std::vector<ProcessedEpisode> out;
  for (const std::string& task : tasks) {
    for (int i = 0; i < per_task; ++i) {
      out.push_back(
          clean_actions(generate_demonstration(task, seed + static_cast<std::uint64_t>(i), ref_mode, NoiseProfile::kNone)));
    }
  }
  return out;
}

std::vector<AttackReport> run_ref_attack(const std::vector<ProcessedEpisode>& ordered_train,
                                         const std::vector<ProcessedEpisode>& randomized_train,
                                         const AttackConfig& config) {
  const Vocabulary vocab = Vocabulary::standard();
  std::vector<AttackReport> reports;
  auto score = [&](AgentPolicy& policy, const std::string& name, RefMode trained_on) {
    AttackReport r;
    r.policy = name;
    r.trained_on = trained_on;
    r.accuracy_ordered_test = evaluate_accuracy(policy, config.tasks, config.eval_episodes, config.eval_seed,
                                                RefMode::kOrdered, Ablation::kNone, name).average;
    r.accuracy_randomized_test = evaluate_accuracy(policy, config.tasks, config.eval_episodes, config.eval_seed,
                                                   RefMode::kRandomized, Ablation::kNone, name).average;
    r.drop = r.accuracy_ordered_test - r.accuracy_randomized_test;
    reports.push_back(r);
  };
  for (RefMode mode : {RefMode::kOrdered, RefMode::kRandomized}) {
    const auto& train = mode == RefMode::kOrdered ? ordered_train : randomized_train;
    MemorizingBaseline baseline = memorizing_baseline_fit(train);
    score(baseline, "baseline", mode);
  }
  for (RefMode mode : {RefMode::kOrdered, RefMode::kRandomized}) {
    const auto& train = mode == RefMode::kOrdered ? ordered_train : randomized_train;
    PolicyParams params = PolicyParams::init(config.seed);
    const ExampleSet ex = build_bc_examples(train, vocab);
    train_bc(params, ex.examples, vocab, config.rl, config.bc_steps, config.seed);
    NetworkPolicy tiny(params, vocab);
    score(tiny, "tiny", mode);
  }
  return reports;
}

nlohmann::json attack_to_json(const std::vector<AttackReport>& reports) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : reports) {
    out.push_back({{"policy", r.policy}, {"trained_on", to_string(r.trained_on)}, {"test_mode", "ordered"},
                   {"accuracy", r.accuracy_ordered_test}});
    out.push_back({{"policy", r.policy}, {"trained_on", to_string(r.trained_on)}, {"test_mode", "randomized"},
                   {"accuracy", r.accuracy_randomized_test}});
  }
  return out;
}

std::vector<EvalReport> run_ablation(const PolicyFactory& make_policy, const std::vector<Ablation>& modes,
                                     const std::vector<std::string>& tasks, int episodes_per_task,
                                     std::uint64_t seed, RefMode ref_mode, const std::string& label) {
  std::vector<Ablation> all{Ablation::kNone};
  for (Ablation a : modes) {
    if (std::find(all.begin(), all.end(), a) == all.end()) all.push_back(a);
  }
  std::vector<EvalReport> out;
  for (Ablation a : all) {
    auto policy = make_policy(a);
    out.push_back(evaluate_accuracy(*policy, tasks, episodes_per_task, seed, ref_mode, a, label));
  }
  return out;
}

std::string reports_to_csv(const std::vector<EvalReport>& reports) {
  std::ostringstream o;
  o << "condition,task,accuracy\n";
  o << std::fixed << std::setprecision(4);
  for (const auto& r : reports) {
    for (const auto& [task, acc] : r.per_task_accuracy) o << r.condition() << "," << task << "," << acc << "\n";
  }
  return o.str();
}

std::string reports_to_table(const std::vector<EvalReport>& reports) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(2);
  for (const auto& r : reports) {
    o << r.condition() << "  (" << r.episodes_per_task << " episodes/task)\n";
    for (const auto& [task, acc] : r.per_task_accuracy) {
      o << "  " << std::left << std::setw(26) << task << std::right << std::setw(7) << acc * 100 << "%\n";
    }
    o << "  " << std::left << std::setw(26) << "average" << std::right << std::setw(7) << r.average * 100 << "%\n";
  }
  return o.str();
}

void emit_report(const std::vector<EvalReport>& reports, const std::string& csv_path, const std::string& table_path) {
  write_file(csv_path, reports_to_csv(reports));
  write_file(table_path, reports_to_table(reports));
}

}  // namespace webnav
