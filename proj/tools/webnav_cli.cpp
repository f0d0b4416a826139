// webnav command-line driver.
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "webnav/eval.hpp"

using namespace webnav;

namespace {

struct RunContext {
  std::string command;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  nlohmann::json flags = nlohmann::json::object();
};

std::vector<std::string> parse_tasks(const std::string& spec) {
  if (spec == "all") return task_registry();
  std::vector<std::string> out;
  std::stringstream ss(spec);
  std::string t;
  while (std::getline(ss, t, ',')) {
    if (t.empty()) continue;
    if (!is_registered_task(t)) throw UnknownTaskError("unknown task '" + t + "'");
    out.push_back(t);
  }
  if (out.empty()) throw ConfigError("no tasks given");
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string t;
  while (std::getline(ss, t, ',')) {
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

void write_manifest(const RunContext& ctx) {
  nlohmann::json m;
  m["command"] = ctx.command;
  m["flags"] = ctx.flags;
  m["seed"] = ctx.seed;
  nlohmann::json digests = nlohmann::json::object();
  for (const auto& in : ctx.inputs) digests[in] = hex_digest(read_file(in));
  m["input_digests"] = digests;
  m["outputs"] = ctx.outputs;
  m["timestamp"] = timestamp();
  write_file(ctx.outputs.front() + ".manifest.json", m.dump(2) + "\n");
}

void record_flags(const CLI::App& sub, RunContext& ctx) {
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_name() == "--help" || opt->count() == 0) continue;
    const auto results = opt->results();
    ctx.flags[opt->get_name()] = results.size() == 1 ? nlohmann::json(results[0]) : nlohmann::json(results);
  }
}

std::string policy_vocab_path(const std::string& ckpt) { return ckpt + ".vocab"; }

Vocabulary load_vocab(const std::string& ckpt) {
  return Vocabulary::from_lines(read_lines(policy_vocab_path(ckpt)));
}

void save_policy(const std::string& path, const PolicyParams& params, const Vocabulary& vocab) {
  save_checkpoint(path, params);
  write_file(policy_vocab_path(path), vocab.to_text());
}

RlConfig load_config(const std::string& path, std::uint64_t seed, RunContext& ctx) {
  RlConfig c;
  if (!path.empty()) {
    c = parse_config(read_file(path));
    ctx.inputs.push_back(path);
  }
  c.seed = seed;
  return c;
}

std::vector<Phase> parse_schedule(const std::string& s) {
  // "offline:online,offline:online,..."
  std::vector<Phase> out;
  for (const auto& item : split_list(s)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("schedule entries look like OFFLINE:ONLINE");
    try {
      out.push_back({std::stoi(item.substr(0, colon)), std::stoi(item.substr(colon + 1))});
    } catch (const std::logic_error&) {
      throw ConfigError("bad schedule entry '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty schedule");
  return out;
}

// Holds whatever a --policy argument resolves to.
struct LoadedPolicy {
  PolicyParams params;
  Vocabulary vocab;
  std::unique_ptr<AgentPolicy> make(const std::string& spec, Ablation ablation, std::uint64_t seed) const {
    if (spec == "oracle") return std::make_unique<OraclePolicy>();
    if (spec == "random") return std::make_unique<RandomClickPolicy>(seed);
    return std::make_unique<NetworkPolicy>(params, vocab, ablation);
  }
};

LoadedPolicy load_policy(const std::string& spec, RunContext& ctx) {
  LoadedPolicy p;
  if (spec != "oracle" && spec != "random") {
    p.params = load_checkpoint(spec);
    p.vocab = load_vocab(spec);
    ctx.inputs.push_back(spec);
  }
  return p;
}

std::vector<EvalReport> parse_report_csv(const std::string& path) {
  std::vector<EvalReport> out;
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != "condition,task,accuracy") throw ParseError(path + ": missing report header");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cols = split_list(lines[i]);
    if (cols.size() != 3) throw ParseError(path + ":" + std::to_string(i + 1) + ": expected 3 columns");
    const auto parts = [&] {
      std::vector<std::string> v;
      std::stringstream ss(cols[0]);
      std::string t;
      while (std::getline(ss, t, '/')) v.push_back(t);
      return v;
    }();
    if (parts.size() != 3) throw ParseError(path + ":" + std::to_string(i + 1) + ": bad condition");
    if (out.empty() || out.back().condition() != cols[0]) {
      EvalReport r;
      r.label = parts[0];
      r.ref_mode = parse_ref_mode(parts[1]);
      r.ablation = parse_ablation(parts[2]);
      out.push_back(r);
    }
    try {
      out.back().per_task_accuracy[cols[1]] = std::stod(cols[2]);
    } catch (const std::logic_error&) {
      throw ParseError(path + ":" + std::to_string(i + 1) + ": bad accuracy");
    }
  }
  for (auto& r : out) {
    double sum = 0;
    for (const auto& [t, a] : r.per_task_accuracy) sum += a;
    r.average = sum / static_cast<double>(r.per_task_accuracy.size());
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"webnav: simulated web tasks, demonstration processing, training and evaluation"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  int jobs = 1;
  RunContext ctx;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--jobs", jobs, "worker bound")->check(CLI::PositiveNumber);
  };

  // gen-demos
  std::string tasks_spec = "all", out, in, ref_mode_s = "ordered", noise_s = "all", config_path, patches_path;
  int count = 10;
  auto* gen = app.add_subcommand("gen-demos", "generate raw demonstrations from noisy oracle runs");
  gen->add_option("--tasks", tasks_spec);
  gen->add_option("--count", count, "demonstrations per task")->check(CLI::NonNegativeNumber);
  gen->add_option("--ref-mode", ref_mode_s)->check(CLI::IsMember({"ordered", "randomized"}));
  gen->add_option("--noise", noise_s);
  gen->add_option("--out", out)->required();
  add_common(gen);

  std::size_t cap = 150;
  auto* process = app.add_subcommand("process", "clean raw demonstrations into episodes");
  process->add_option("--in", in)->required();
  process->add_option("--cap", cap, "max episodes per task");
  process->add_option("--patches", patches_path);
  process->add_option("--out", out)->required();
  add_common(process);

  auto* plans = app.add_subcommand("gen-plans", "derive utterance-to-plan examples");
  plans->add_option("--in", in)->required();
  plans->add_option("--out", out)->required();
  add_common(plans);

  int steps = 300;
  bool use_plan = true;
  std::string loss_out;
  auto* train_bc_cmd = app.add_subcommand("train-bc", "behavioral cloning");
  train_bc_cmd->add_option("--in", in)->required();
  train_bc_cmd->add_option("--steps", steps)->check(CLI::PositiveNumber);
  train_bc_cmd->add_option("--config", config_path);
  train_bc_cmd->add_flag("!--no-plan", use_plan, "condition on the whole utterance");
  train_bc_cmd->add_option("--loss-out", loss_out);
  train_bc_cmd->add_option("--out", out)->required();
  add_common(train_bc_cmd);

  std::string policy_spec, schedule_s = "0:200", metrics_out;
  int episodes = 100;
  auto* train_rl = app.add_subcommand("train-rl", "alternating offline/online training");
  train_rl->add_option("--policy", policy_spec)->required();
  train_rl->add_option("--demos", in)->required();
  train_rl->add_option("--tasks", tasks_spec);
  train_rl->add_option("--schedule", schedule_s, "OFFLINE:ONLINE phases, comma separated");
  train_rl->add_option("--ref-mode", ref_mode_s)->check(CLI::IsMember({"ordered", "randomized"}));
  train_rl->add_option("--episodes", episodes, "evaluation episodes per task");
  train_rl->add_option("--config", config_path);
  train_rl->add_option("--metrics-out", metrics_out);
  train_rl->add_option("--out", out)->required();
  add_common(train_rl);

  std::string ablation_s = "none";
  auto* evaluate = app.add_subcommand("evaluate", "accuracy over seeded episodes");
  evaluate->add_option("--policy", policy_spec, "checkpoint, 'oracle' or 'random'")->required();
  evaluate->add_option("--tasks", tasks_spec);
  evaluate->add_option("--episodes", episodes)->check(CLI::PositiveNumber);
  evaluate->add_option("--ref-mode", ref_mode_s)->check(CLI::IsMember({"ordered", "randomized"}));
  evaluate->add_option("--ablation", ablation_s)->check(CLI::IsMember({"none", "no_history", "no_vision", "no_plan"}));
  evaluate->add_option("--out", out)->required();
  add_common(evaluate);

  std::string ordered_in, randomized_in;
  auto* attack = app.add_subcommand("attack", "reference-randomization attack");
  attack->add_option("--ordered", ordered_in, "episodes recorded with ordered refs")->required();
  attack->add_option("--randomized", randomized_in, "episodes recorded with randomized refs")->required();
  attack->add_option("--tasks", tasks_spec);
  attack->add_option("--steps", steps)->check(CLI::PositiveNumber);
  attack->add_option("--episodes", episodes)->check(CLI::PositiveNumber);
  attack->add_option("--config", config_path);
  attack->add_option("--out", out)->required();
  add_common(attack);

  std::string modes_s = "no_history,no_vision,no_plan";
  auto* ablate = app.add_subcommand("ablate", "paired-seed input ablations");
  ablate->add_option("--policy", policy_spec)->required();
  ablate->add_option("--modes", modes_s);
  ablate->add_option("--tasks", tasks_spec);
  ablate->add_option("--episodes", episodes)->check(CLI::PositiveNumber);
  ablate->add_option("--ref-mode", ref_mode_s)->check(CLI::IsMember({"ordered", "randomized"}));
  ablate->add_option("--out", out)->required();
  add_common(ablate);

  std::vector<std::string> report_ins;
  auto* report = app.add_subcommand("report", "merge report CSVs into one CSV and table");
  report->add_option("--in", report_ins)->required();
  report->add_option("--out", out)->required();
  add_common(report);

  auto* stats = app.add_subcommand("stats", "per-task episode counts");
  stats->add_option("--in", in)->required();
  stats->add_option("--out", out)->required();
  add_common(stats);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  ctx.command = sub->get_name();
  record_flags(*sub, ctx);

  try {
    ctx.seed = seed;
    ctx.outputs.push_back(out);
    const RefMode ref_mode = parse_ref_mode(ref_mode_s);

    if (ctx.command == "gen-demos") {
      const NoiseProfile noise = parse_noise_profile(noise_s);
      std::string text;
      for (const auto& task : parse_tasks(tasks_spec)) {
        for (int i = 0; i < count; ++i) {
          const std::uint64_t s = mix_seed(seed, static_cast<std::uint64_t>(i)) % 1'000'000'007ULL;
          text += demonstration_to_json(generate_demonstration(task, s, ref_mode, noise)).dump() + "\n";
        }
      }
      write_file(out, text);
    } else if (ctx.command == "process") {
      ctx.inputs.push_back(in);
      std::vector<ProcessedEpisode> eps;
      for (const auto& d : read_demonstrations(in)) eps.push_back(clean_actions(d));
      if (!patches_path.empty()) {
        ctx.inputs.push_back(patches_path);
        eps = apply_patches(std::move(eps), parse_patches(read_file(patches_path)));
      }
      write_file(out, episodes_to_jsonl(downsample(eps, cap, seed)));
    } else if (ctx.command == "gen-plans") {
      ctx.inputs.push_back(in);
      const PlanDataset ds = derive_plan_dataset(read_episodes(in));
      std::string text;
      for (const auto& e : ds.examples) text += plan_example_to_json(e).dump() + "\n";
      write_file(out, text);
      std::cerr << ds.examples.size() << " plans, " << ds.dropped << " dropped\n";
    } else if (ctx.command == "train-bc") {
      ctx.inputs.push_back(in);
      const RlConfig config = load_config(config_path, seed, ctx);
      const auto eps = read_episodes(in);
      const Vocabulary vocab = Vocabulary::standard();
      const ExampleSet ex = build_bc_examples(eps, vocab, use_plan);
      if (ex.examples.empty()) throw ParseError(in + ": no usable training steps");
      PolicyParams params = PolicyParams::init(seed);
      const BcResult r = train_bc(params, ex.examples, vocab, config, steps, seed);
      save_policy(out, params, vocab);
      ctx.outputs.push_back(policy_vocab_path(out));
      if (!loss_out.empty()) {
        std::ostringstream o;
        o.precision(10);
        o << "step,loss\n";
        for (std::size_t i = 0; i < r.loss_curve.size(); ++i) o << i + 1 << "," << r.loss_curve[i] << "\n";
        write_file(loss_out, o.str());
        ctx.outputs.push_back(loss_out);
      }
    } else if (ctx.command == "train-rl") {
      ctx.inputs.push_back(in);
      const RlConfig config = load_config(config_path, seed, ctx);
      LoadedPolicy lp = load_policy(policy_spec, ctx);
      AlternatingOptions opt;
      opt.tasks = parse_tasks(tasks_spec);
      opt.ref_mode = ref_mode;
      opt.eval_episodes = episodes;
      opt.eval_seed = seed;
      const AlternatingResult r = run_alternating(lp.params, lp.vocab, read_episodes(in), config,
                                                  parse_schedule(schedule_s), opt);
      save_policy(out, lp.params, lp.vocab);
      ctx.outputs.push_back(policy_vocab_path(out));
      if (!metrics_out.empty()) {
        write_file(metrics_out, metrics_to_csv(r.metrics));
        ctx.outputs.push_back(metrics_out);
      }
    } else if (ctx.command == "evaluate") {
      const LoadedPolicy lp = load_policy(policy_spec, ctx);
      const Ablation ablation = parse_ablation(ablation_s);
      auto policy = lp.make(policy_spec, ablation, seed);
      const EvalReport r =
          evaluate_accuracy(*policy, parse_tasks(tasks_spec), episodes, seed, ref_mode, ablation, policy_spec);
      emit_report({r}, out, out + ".txt");
      ctx.outputs.push_back(out + ".txt");
    } else if (ctx.command == "attack") {
      ctx.inputs.push_back(ordered_in);
      ctx.inputs.push_back(randomized_in);
      AttackConfig ac;
      ac.rl = load_config(config_path, seed, ctx);
      ac.tasks = parse_tasks(tasks_spec);
      ac.bc_steps = steps;
      ac.eval_episodes = episodes;
      ac.eval_seed = seed;
      ac.seed = seed;
      const auto reports = run_ref_attack(read_episodes(ordered_in), read_episodes(randomized_in), ac);
      write_file(out, attack_to_json(reports).dump(2) + "\n");
    } else if (ctx.command == "ablate") {
      const LoadedPolicy lp = load_policy(policy_spec, ctx);
      std::vector<Ablation> modes;
      for (const auto& m : split_list(modes_s)) modes.push_back(parse_ablation(m));
      const auto reports = run_ablation([&](Ablation a) { return lp.make(policy_spec, a, seed); }, modes,
                                        parse_tasks(tasks_spec), episodes, seed, ref_mode, policy_spec);
      emit_report(reports, out, out + ".txt");
      ctx.outputs.push_back(out + ".txt");
    } else if (ctx.command == "report") {
      std::vector<EvalReport> all;
      for (const auto& path : report_ins) {
        ctx.inputs.push_back(path);
        auto rs = parse_report_csv(path);
        all.insert(all.end(), rs.begin(), rs.end());
      }
      emit_report(all, out, out + ".txt");
      ctx.outputs.push_back(out + ".txt");
    } else if (ctx.command == "stats") {
      ctx.inputs.push_back(in);
      write_file(out, stats_to_csv(dataset_stats(read_episodes(in))));
    }
    write_manifest(ctx);
  } catch (const UnknownTaskError& e) {
    std::cerr << "error: " << e.what() << "\n" << sub->help();
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
