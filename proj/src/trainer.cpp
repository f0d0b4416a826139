#include "webnav/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "webnav/eval.hpp"

namespace webnav {

void RlConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0)) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(learning_rate, "learning_rate");
  positive(sl_learning_rate, "sl_learning_rate");
  positive(adam_b1, "adam_b1");
  positive(adam_b2, "adam_b2");
  positive(adam_eps, "adam_eps");
  positive(weight_decay, "weight_decay");
  positive(vmpo_alpha, "vmpo_alpha");
  positive(vmpo_eta, "vmpo_eta");
  positive(batch_size_sl, "batch_size_sl");
  positive(unroll_length, "unroll_length");
  positive(target_update_period, "target_update_period");
  positive(max_steps_per_episode, "max_steps_per_episode");
  if (!(gamma > 0 && gamma <= 1)) throw ConfigError("gamma must lie in (0, 1]");
  if (adam_b1 >= 1 || adam_b2 >= 1) throw ConfigError("adam betas must be below 1");
}

RlConfig parse_config(const std::string& text) {
  RlConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    auto eq = line.find('=');
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "learning_rate") c.learning_rate = std::stod(val);
      else if (key == "adam_b1") c.adam_b1 = std::stod(val);
      else if (key == "adam_b2") c.adam_b2 = std::stod(val);
      else if (key == "adam_eps") c.adam_eps = std::stod(val);
      else if (key == "weight_decay") c.weight_decay = std::stod(val);
      else if (key == "vmpo_alpha") c.vmpo_alpha = std::stod(val);
      else if (key == "vmpo_eta") c.vmpo_eta = std::stod(val);
      else if (key == "gamma") c.gamma = std::stod(val);
      else if (key == "batch_size_sl") c.batch_size_sl = std::stoi(val);
      else if (key == "unroll_length") c.unroll_length = std::stoi(val);
      else if (key == "target_update_period") c.target_update_period = std::stoi(val);
      else if (key == "max_steps_per_episode") c.max_steps_per_episode = std::stoi(val);
      else if (key == "sl_learning_rate") c.sl_learning_rate = std::stod(val);
      else if (key == "learned_multipliers") c.learned_multipliers = val == "true" || val == "1";
      else if (key == "eps_eta") c.eps_eta = std::stod(val);
      else if (key == "eps_alpha") c.eps_alpha = std::stod(val);
      else if (key == "multiplier_learning_rate") c.multiplier_learning_rate = std::stod(val);
      else if (key == "freeze_encoder_in_rl") c.freeze_encoder_in_rl = val == "true" || val == "1";
      else if (key == "success_buffer_capacity") c.success_buffer_capacity = std::stoul(val);
      else if (key == "seed") c.seed = std::stoull(val);
      else throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    } catch (const std::logic_error&) {
      throw ConfigError("config line " + std::to_string(lineno) + ": bad value for '" + key + "'");
    }
  }
  c.validate();
  return c;
}

std::string config_to_text(const RlConfig& c) {
  std::ostringstream o;
  o.precision(17);
  o << "learning_rate=" << c.learning_rate << "\n"
    << "adam_b1=" << c.adam_b1 << "\n"
    << "adam_b2=" << c.adam_b2 << "\n"
    << "adam_eps=" << c.adam_eps << "\n"
    << "weight_decay=" << c.weight_decay << "\n"
    << "vmpo_alpha=" << c.vmpo_alpha << "\n"
    << "vmpo_eta=" << c.vmpo_eta << "\n"
    << "gamma=" << c.gamma << "\n"
    << "batch_size_sl=" << c.batch_size_sl << "\n"
    << "unroll_length=" << c.unroll_length << "\n"
    << "target_update_period=" << c.target_update_period << "\n"
    << "max_steps_per_episode=" << c.max_steps_per_episode << "\n"
    << "sl_learning_rate=" << c.sl_learning_rate << "\n"
    << "learned_multipliers=" << (c.learned_multipliers ? "true" : "false") << "\n"
    << "eps_eta=" << c.eps_eta << "\n"
    << "eps_alpha=" << c.eps_alpha << "\n"
    << "multiplier_learning_rate=" << c.multiplier_learning_rate << "\n"
    << "freeze_encoder_in_rl=" << (c.freeze_encoder_in_rl ? "true" : "false") << "\n"
    << "success_buffer_capacity=" << c.success_buffer_capacity << "\n"
    << "seed=" << c.seed << "\n";
  return o.str();
}

void adam_step(PolicyParams& params, std::span<const double> grad, const RlConfig& config, double learning_rate,
               AdamState& state, std::span<const Tensor> frozen) {
  const std::size_t n = param_count();
  if (grad.size() != n) throw ContractError("adam_step: gradient size mismatch");
  for (double g : grad) {
    if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient");
  }
  if (state.m.size() != n) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
    state.t = 0;
  }
  ++state.t;
  const double b1 = config.adam_b1;
  const double b2 = config.adam_b2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  std::span<double> p = params.mutable_data();
  for (std::size_t ti = 0; ti < param_layout().size(); ++ti) {
    const TensorInfo& t = param_layout()[ti];
    if (std::find(frozen.begin(), frozen.end(), static_cast<Tensor>(ti)) != frozen.end()) continue;
    const double decay = t.is_bias ? 0.0 : config.weight_decay;
    for (std::size_t i = t.offset; i < t.offset + t.size(); ++i) {
      const double g = grad[i];
      state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
      state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
      const double mhat = state.m[i] / c1;
      const double vhat = state.v[i] / c2;
      p[i] -= learning_rate * (mhat / (std::sqrt(vhat) + config.adam_eps) + decay * p[i]);
    }
  }
}

ExampleSet build_bc_examples(const std::vector<ProcessedEpisode>& episodes, const Vocabulary& vocab, bool use_plan,
                             Ablation ablation) {
  ExampleSet out;
  for (const ProcessedEpisode& e : episodes) {
    Plan plan{{e.utterance}};
    if (use_plan && has_translation_rule(e.task)) {
      try {
        plan = translate_utterance(e.task, e.utterance);
      } catch (const TranslationError&) {
      }
    }
    const std::vector<int> align = align_plan(e, plan);
    const std::vector<bool> done = subtask_done_targets(align);
    std::vector<Action> history;
    for (std::size_t i = 0; i < e.steps.size(); ++i) {
      const EpisodeStep& s = e.steps[i];
      const Action& a = s.action;
      bool ok = true;
      if (!a.is_click()) {
        try {
          keydown_targets(a.text, vocab);
        } catch (const UnknownTokenError&) {
          ok = false;
        }
      }
      if (ok) {
        const Observation obs{e.utterance, s.snapshot, rasterize(s.snapshot)};
        const std::string& subtask = plan.subtasks[static_cast<std::size_t>(align[i])];
        out.examples.push_back({encode_features(obs, history, subtask, ablation, vocab), {a, done[i]}});
      } else {
        ++out.rejected;
      }
      history.push_back(a);
    }
  }
  return out;
}

double batch_ce_loss(const PolicyParams& params, std::span<const TrainingExample* const> examples,
                     const Vocabulary& vocab, std::vector<double>* grad) {
  if (examples.empty()) throw ConfigError("empty batch");
  const double scale = 1.0 / static_cast<double>(examples.size());
  double total = 0.0;
  ForwardCache cache;
  for (const TrainingExample* ex : examples) {
    const PolicyOutput out = forward(params, ex->features, &cache);
    LossResult r = ce_loss(out, ex->target, vocab);
    total += r.loss;
    if (grad) {
      r.grad.action_type *= scale;
      r.grad.subtask_done *= scale;
      for (double& g : r.grad.ref) g *= scale;
      if (r.grad.keydown_active) {
        for (double& g : r.grad.keydown) g *= scale;
      }
      backward(params, ex->features, cache, r.grad, *grad);
    }
  }
  return total * scale;
}

BcResult train_bc(PolicyParams& params, const std::vector<TrainingExample>& examples, const Vocabulary& vocab,
                  const RlConfig& config, int steps, std::uint64_t seed) {
  if (examples.empty() || config.batch_size_sl <= 0) throw ConfigError("train_bc: empty batch");
  BcResult result;
  result.examples_per_step = static_cast<std::size_t>(config.batch_size_sl);
  Rng rng(mix_seed(seed, 0xbc));
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(order, rng);
  std::size_t cursor = 0;
  AdamState adam;
  std::vector<double> grad(param_count());
  std::vector<const TrainingExample*> batch;
  for (int s = 0; s < steps; ++s) {
    batch.clear();
    while (batch.size() < result.examples_per_step) {
      if (cursor == order.size()) {
        shuffle(order, rng);
        cursor = 0;
      }
      batch.push_back(&examples[order[cursor++]]);
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    result.loss_curve.push_back(batch_ce_loss(params, batch, vocab, &grad));
    adam_step(params, grad, config, config.sl_learning_rate, adam);
  }
  return result;
}

std::vector<double> compute_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> g(rewards.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    g[i] = acc;
  }
  return g;
}

void select_top_half(std::span<const double> advantages, double eta, std::vector<std::size_t>& selected,
                     std::vector<double>& psi) {
  if (!(eta > 0)) throw ConfigError("vmpo eta must be positive");
  std::vector<std::size_t> idx(advantages.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return advantages[a] > advantages[b]; });
  idx.resize((advantages.size() + 1) / 2);
  std::sort(idx.begin(), idx.end());
  selected = idx;
  psi.assign(selected.size(), 0.0);
  if (selected.empty()) return;
  double m = -1e300;
  for (std::size_t i : selected) m = std::max(m, advantages[i] / eta);
  double z = 0.0;
  for (std::size_t k = 0; k < selected.size(); ++k) {
    psi[k] = std::exp(advantages[selected[k]] / eta - m);
    z += psi[k];
  }
  for (double& p : psi) p /= z;
}

double vmpo_loss(const PolicyParams& params, const PolicyParams& target_params,
                 std::span<const TrajectoryStep* const> steps, VmpoBatch& batch, std::vector<double>* grad) {
  const double n = static_cast<double>(steps.size());
  std::vector<double> weight(steps.size(), 0.0);
  for (std::size_t k = 0; k < batch.selected.size(); ++k) weight[batch.selected[k]] = batch.psi_weights[k];

  batch.policy_loss = batch.value_loss = batch.kl = 0.0;
  ForwardCache cache;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const TrajectoryStep& s = *steps[t];
    const PolicyOutput out = forward(params, s.features, &cache);
    const PolicyOutput target_out = forward(target_params, s.features);
    OutputGrad dout;

    if (weight[t] > 0) {
      const double lp = action_log_prob(out, s.snapshot, s.action, grad ? &dout : nullptr, -weight[t]);
      batch.policy_loss -= weight[t] * lp;
    }

    const double err = out.value - s.ret;
    batch.value_loss += 0.5 * err * err;
    dout.value = err;

    const std::vector<double> p = masked_ref_probs(out, s.snapshot);
    const std::vector<double> q = masked_ref_probs(target_out, s.snapshot);
    double kl = 0.0;
    for (const auto& [ref, path] : s.snapshot.ref_index()) {
      const auto i = static_cast<std::size_t>(ref - 1);
      if (q[i] > 0) kl += q[i] * (std::log(q[i]) - std::log(p[i]));
      dout.ref[i] += batch.alpha / n * (p[i] - q[i]);
    }
    batch.kl += kl / n;

    if (grad) backward(params, s.features, cache, dout, *grad);
  }
  batch.total_loss = batch.policy_loss + batch.value_loss + batch.alpha * batch.kl;
  return batch.total_loss;
}

VmpoLearner make_learner(const PolicyParams& params, const RlConfig& config) {
  VmpoLearner l;
  l.target = params;
  l.eta = config.vmpo_eta;
  l.alpha = config.vmpo_alpha;
  return l;
}

VmpoBatch vmpo_update(PolicyParams& params, VmpoLearner& learner, std::span<const TrajectoryStep* const> steps,
                      const RlConfig& config) {
  if (steps.empty()) throw ConfigError("vmpo_update: empty batch");
  VmpoBatch batch;
  batch.eta = learner.eta;
  batch.alpha = learner.alpha;
  for (const TrajectoryStep* s : steps) batch.advantages.push_back(s->ret - forward(params, s->features).value);
  select_top_half(batch.advantages, batch.eta, batch.selected, batch.psi_weights);

  std::vector<double> grad(param_count(), 0.0);
  vmpo_loss(params, learner.target, steps, batch, &grad);
  static constexpr std::array<Tensor, 2> kEncoder = {Tensor::kW1, Tensor::kB1};
  adam_step(params, grad, config, config.learning_rate, learner.adam,
            config.freeze_encoder_in_rl ? std::span<const Tensor>(kEncoder) : std::span<const Tensor>());

  if (config.learned_multipliers) {
    // Dual descent on the temperature and KL multipliers.
    double mean_exp = 0.0;
    double m = -1e300;
    for (std::size_t i : batch.selected) m = std::max(m, batch.advantages[i] / batch.eta);
    for (std::size_t i : batch.selected) mean_exp += std::exp(batch.advantages[i] / batch.eta - m);
    mean_exp /= static_cast<double>(batch.selected.size());
    double weighted_adv = 0.0;
    for (std::size_t k = 0; k < batch.selected.size(); ++k) {
      weighted_adv += batch.psi_weights[k] * batch.advantages[batch.selected[k]];
    }
    const double d_eta = config.eps_eta + m + std::log(mean_exp) - weighted_adv / batch.eta;
    learner.eta = std::max(1e-3, learner.eta - config.multiplier_learning_rate * d_eta);
    learner.alpha = std::max(0.0, learner.alpha - config.multiplier_learning_rate * (config.eps_alpha - batch.kl));
  }

  ++learner.updates;
  if (learner.updates % config.target_update_period == 0) {
    learner.target = params;
    learner.target_sync_updates.push_back(learner.updates);
  }
  return batch;
}

Trajectory collect_episode(const PolicyParams& params, const Vocabulary& vocab, const std::string& task,
                           std::uint64_t seed, RefMode ref_mode, const RlConfig& config, Rng& rng) {
  auto [env, obs] = reset(task, seed, ref_mode, config.max_steps_per_episode);
  Trajectory traj;
  traj.task = task;
  traj.seed = seed;
  traj.utterance = env.utterance;
  Plan plan{{env.utterance}};
  try {
    plan = translate_utterance(task, env.utterance);
  } catch (const Error&) {
  }
  std::vector<Action> history;
  for (const std::string& subtask : plan.subtasks) {
    for (int n = 0; n < config.max_steps_per_episode && !env.terminated; ++n) {
      TrajectoryStep ts;
      ts.features = encode_features(obs, history, subtask, Ablation::kNone, vocab);
      ts.snapshot = obs.snapshot;
      const PolicyOutput out = forward(params, ts.features);
      ts.action = sample_action(out, obs.snapshot, vocab, rng);
      ts.log_prob = ts.action.log_prob;
      const bool done = sigmoid(out.subtask_done_logit) > 0.5;
      StepResult r = step(env, ts.action.action);
      history.push_back(ts.action.action);
      ts.reward = r.reward;
      ts.terminated = r.terminated;
      obs = std::move(r.observation);
      traj.steps.push_back(std::move(ts));
      if (done) break;
    }
    if (env.terminated) break;
  }
  std::vector<double> rewards;
  for (const auto& s : traj.steps) rewards.push_back(s.reward);
  const auto returns = compute_returns(rewards, config.gamma);
  for (std::size_t i = 0; i < traj.steps.size(); ++i) traj.steps[i].ret = returns[i];
  traj.reward = traj.steps.empty() ? 0.0 : traj.steps.back().reward;
  traj.success = env.terminated && env.raw_reward > 0;
  return traj;
}

ProcessedEpisode trajectory_to_episode(const Trajectory& t) {
  ProcessedEpisode e;
  e.id = t.task + "-online-" + std::to_string(t.seed);
  e.task = t.task;
  e.utterance = t.utterance;
  for (const auto& s : t.steps) e.steps.push_back({s.snapshot, s.action.action});
  return e;
}

bool SuccessBuffer::admit(ProcessedEpisode episode, double reward) {
  if (!(reward > 0) || capacity_ == 0) return false;
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(episode));
  return true;
}

AlternatingResult run_alternating(PolicyParams& params, const Vocabulary& vocab,
                                  const std::vector<ProcessedEpisode>& demos, const RlConfig& config,
                                  const std::vector<Phase>& schedule, const AlternatingOptions& options) {
  if (schedule.empty()) throw ConfigError("run_alternating: empty schedule");
  config.validate();
  AlternatingResult result;
  result.buffer = SuccessBuffer(config.success_buffer_capacity);
  VmpoLearner learner = make_learner(params, config);
  Rng rng(mix_seed(config.seed, 0xa17e));
  std::uint64_t online_seed = options.online_seed;

  auto evaluate = [&]() -> double {
    if (!options.evaluate || options.tasks.empty()) return 0.0;
    NetworkPolicy policy(params, vocab);
    return evaluate_accuracy(policy, options.tasks, options.eval_episodes, options.eval_seed, options.ref_mode,
                             Ablation::kNone, "alternating").average;
  };

  for (std::size_t p = 0; p < schedule.size(); ++p) {
    const Phase& ph = schedule[p];
    if (ph.offline_steps > 0) {
      std::vector<ProcessedEpisode> data = demos;
      data.insert(data.end(), result.buffer.contents().begin(), result.buffer.contents().end());
      const ExampleSet ex = build_bc_examples(data, vocab);
      const BcResult bc = train_bc(params, ex.examples, vocab, config, ph.offline_steps, mix_seed(config.seed, p));
      PhaseMetrics m;
      m.phase = static_cast<int>(p);
      m.kind = "offline";
      m.steps = ph.offline_steps;
      m.loss = bc.loss_curve.empty() ? 0.0 : bc.loss_curve.back();
      m.dataset_size = data.size();
      m.buffer_size = result.buffer.size();
      m.accuracy = evaluate();
      result.metrics.push_back(m);
    }
    if (ph.online_episodes > 0) {
      learner.target = params;
      std::vector<Trajectory> pending;
      std::vector<const TrajectoryStep*> batch;
      double last_loss = 0.0;
      int updates = 0;
      for (int e = 0; e < ph.online_episodes; ++e) {
        const std::string& task = options.tasks[static_cast<std::size_t>(e) % options.tasks.size()];
        Trajectory t = collect_episode(params, vocab, task, online_seed++, options.ref_mode, config, rng);
        result.buffer.admit(trajectory_to_episode(t), t.reward);
        pending.push_back(std::move(t));
        std::size_t total = 0;
        for (const auto& tr : pending) total += tr.steps.size();
        if (total < static_cast<std::size_t>(config.unroll_length)) continue;
        batch.clear();
        for (const auto& tr : pending) {
          for (const auto& s : tr.steps) {
            if (batch.size() < static_cast<std::size_t>(config.unroll_length)) batch.push_back(&s);
          }
        }
        last_loss = vmpo_update(params, learner, batch, config).total_loss;
        ++updates;
        pending.clear();
      }
      PhaseMetrics m;
      m.phase = static_cast<int>(p);
      m.kind = "online";
      m.steps = updates;
      m.loss = last_loss;
      m.dataset_size = static_cast<std::size_t>(ph.online_episodes);
      m.buffer_size = result.buffer.size();
      m.accuracy = evaluate();
      result.metrics.push_back(m);
    }
  }
  return result;
}

std::string metrics_to_csv(const std::vector<PhaseMetrics>& metrics) {
  std::ostringstream o;
  o.precision(10);
  o << "phase,step,loss,accuracy\n";
  for (const auto& m : metrics) {
    o << m.phase << "-" << m.kind << "," << m.steps << "," << m.loss << "," << m.accuracy << "\n";
  }
  return o.str();
}

}  // namespace webnav
