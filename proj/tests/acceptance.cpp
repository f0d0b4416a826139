// End-to-end acceptance checks; one PASS/FAIL line per criterion.
// usage: acceptance <path to webnav_cli> <scratch dir>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

#include "oracles.hpp"
#include "webnav/eval.hpp"
#include "webnav/kernels.hpp"

using namespace webnav;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int n, const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << "CRITERION " << n << " " << (o.pass ? "PASS" : "FAIL") << " [" << name << "] " << o.detail << std::endl;
}

std::string fmt(double x, int prec = 4) {
  std::ostringstream o;
  o.precision(prec);
  o << std::fixed << x;
  return o.str();
}

PolicyParams noisy_params(std::uint64_t seed) {
  PolicyParams p = PolicyParams::init(seed);
  Rng rng(seed + 1);
  for (double& v : p.mutable_data()) v += (uniform_real(rng) - 0.5) * 0.1;
  return p;
}

// Relative error between grad . d and the central difference of `loss` along d.
double directional_check(const PolicyParams& p, const std::vector<double>& grad,
                         const std::function<double(const PolicyParams&)>& loss, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> dir(param_count());
  for (double& d : dir) d = uniform_real(rng) * 2 - 1;
  const double analytic = std::inner_product(grad.begin(), grad.end(), dir.begin(), 0.0);
  const double h = 1e-6;
  PolicyParams plus = p, minus = p;
  auto pp = plus.mutable_data();
  auto pm = minus.mutable_data();
  for (std::size_t i = 0; i < dir.size(); ++i) {
    pp[i] += h * dir[i];
    pm[i] -= h * dir[i];
  }
  return oracle::rel_err(analytic, (loss(plus) - loss(minus)) / (2 * h));
}

std::vector<ProcessedEpisode> processed_demos(const std::vector<std::string>& tasks, int per_task,
                                              std::uint64_t seed, RefMode mode) {
  std::vector<ProcessedEpisode> out;
  for (const auto& t : tasks) {
    for (int i = 0; i < per_task; ++i) {
      out.push_back(clean_actions(generate_demonstration(t, seed + static_cast<std::uint64_t>(i), mode, NoiseProfile::kAll)));
    }
  }
  return downsample(out, 150, seed);
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  int ok = 0, total = 0;
  for (const auto& task : task_registry()) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      auto [env, obs] = reset(task, seed, RefMode::kOrdered);
      while (!env.terminated) step(env, oracle_policy(env.task, env));
      ++total;
      if (env.raw_reward == 1.0) ++ok;
    }
  }
  const double t = seconds_since(t0);
  return {ok == total && t < 30.0, std::to_string(ok) + "/" + std::to_string(total) + " oracle successes in " + fmt(t, 2) + "s"};
}

Outcome criterion2() {
  int equal = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const RawDemonstration d = oracle::random_stream(seed);
    if (clean_actions(d) == oracle::clean_actions(d)) ++equal;
  }
  std::vector<ProcessedEpisode> ds;
  for (const auto& task : task_registry()) {
    const int n = task == "click-button" ? 400 : 60;
    for (int i = 0; i < n; ++i) {
      ProcessedEpisode e;
      e.id = task + std::to_string(i);
      e.task = task;
      ds.push_back(e);
    }
  }
  std::size_t max_count = 0;
  for (const auto& [t, c] : dataset_stats(downsample(ds, 150, 1)).per_task_counts) max_count = std::max(max_count, c);
  return {equal == 1000 && max_count == 150,
          std::to_string(equal) + "/1000 streams match the reference cleaner; largest task after downsample = " +
              std::to_string(max_count)};
}

Outcome criterion3() {
  const std::string flight =
      plan_to_string(translate_utterance("book-flight-simplified",
                                         R"({"Departure City":"Philadelphia","Destination City":"Charlotte","Ticket Type":"Return flight","Departure Day":4,"Returning Day":26,"Passengers":2})"));
  const std::string collapse =
      plan_to_string(translate_utterance("click-collapsible", "Expand the section below and click submit."));
  const bool a = flight == "Select Departure City Philadelphia; Select Destination City Charlotte; Select the Departure Day to 4;";
  const bool b = collapse == "Expand the section below; click submit;";
  return {a && b, "\"" + flight + "\" | \"" + collapse + "\""};
}

Outcome criterion4() {
  const Vocabulary v = Vocabulary::standard();
  Rng rng(41);
  double worst_ce = 0, worst_vmpo = 0;
  const int n = 20;
  for (int inst = 0; inst < n; ++inst) {
    const std::string& task = task_registry()[static_cast<std::size_t>(inst) % task_registry().size()];
    auto [env, obs] = reset(task, static_cast<std::uint64_t>(inst), RefMode::kRandomized);
    const PolicyParams p = noisy_params(static_cast<std::uint64_t>(inst));
    const FeatureVector f = oracle::random_features(rng, env.snapshot);
    const auto refs = env.snapshot.refs();
    const Target t{inst % 2 ? Action::type_text(pick(refs, rng), "hello world") : Action::click(pick(refs, rng)),
                   inst % 3 == 0};
    ForwardCache cache;
    const LossResult r = ce_loss(forward(p, f, &cache), t, v);
    std::vector<double> g(param_count(), 0.0);
    backward(p, f, cache, r.grad, g);
    worst_ce = std::max(worst_ce, directional_check(
                                      p, g, [&](const PolicyParams& q) { return ce_loss(forward(q, f), t, v).loss; },
                                      static_cast<std::uint64_t>(inst)));

    // V-MPO total loss on a batch of sampled steps.
    const PolicyParams target = noisy_params(static_cast<std::uint64_t>(inst) + 100);
    std::vector<TrajectoryStep> steps;
    for (int k = 0; k < 6; ++k) {
      const std::string& tk = task_registry()[uniform_index(rng, task_registry().size())];
      auto [e2, o2] = reset(tk, static_cast<std::uint64_t>(inst * 10 + k), RefMode::kRandomized);
      TrajectoryStep s;
      s.features = oracle::random_features(rng, e2.snapshot);
      s.snapshot = e2.snapshot;
      s.action = sample_action(forward(p, s.features), e2.snapshot, v, rng);
      s.ret = uniform_real(rng) * 2 - 1;
      steps.push_back(std::move(s));
    }
    std::vector<const TrajectoryStep*> sp;
    for (const auto& s : steps) sp.push_back(&s);
    VmpoBatch batch;
    batch.eta = 0.2;
    batch.alpha = 0.1;
    for (const auto& s : steps) batch.advantages.push_back(s.ret - forward(p, s.features).value);
    select_top_half(batch.advantages, batch.eta, batch.selected, batch.psi_weights);
    std::vector<double> gv(param_count(), 0.0);
    vmpo_loss(p, target, sp, batch, &gv);
    worst_vmpo = std::max(worst_vmpo, directional_check(
                                          p, gv,
                                          [&](const PolicyParams& q) {
                                            VmpoBatch b = batch;
                                            return vmpo_loss(q, target, sp, b, nullptr);
                                          },
                                          static_cast<std::uint64_t>(inst) + 1000));
  }
  std::ostringstream d;
  d.precision(2);
  d << std::scientific << n << " instances; worst rel err ce=" << worst_ce << " vmpo=" << worst_vmpo;
  return {worst_ce < 1e-4 && worst_vmpo < 1e-3, d.str()};
}

Outcome criterion5() {
  Rng rng(3);
  bool psi_ok = true, sel_ok = true;
  for (std::size_t n = 1; n <= 64; ++n) {
    std::vector<double> adv(n);
    for (double& a : adv) a = uniform_real(rng) * 6 - 3;
    std::vector<std::size_t> sel;
    std::vector<double> psi;
    select_top_half(adv, 0.2, sel, psi);
    psi_ok &= std::abs(std::accumulate(psi.begin(), psi.end(), 0.0) - 1.0) <= 1e-6;
    sel_ok &= sel.size() == (n + 1) / 2;
  }
  RlConfig c;
  PolicyParams p = noisy_params(5);
  VmpoLearner l = make_learner(p, c);
  const Vocabulary v = Vocabulary::standard();
  Rng r2(9);
  std::vector<TrajectoryStep> steps;
  for (int k = 0; k < 8; ++k) {
    auto [env, obs] = reset("click-button", static_cast<std::uint64_t>(k), RefMode::kOrdered);
    TrajectoryStep s;
    s.features = encode_features(obs, {}, env.utterance, Ablation::kNone, v);
    s.snapshot = env.snapshot;
    s.action = sample_action(forward(p, s.features), env.snapshot, v, r2);
    s.ret = uniform_real(r2);
    steps.push_back(std::move(s));
  }
  std::vector<const TrajectoryStep*> sp;
  for (const auto& s : steps) sp.push_back(&s);
  for (int i = 0; i < 20; ++i) vmpo_update(p, l, sp, c);
  const bool sync_ok = l.target_sync_updates == std::vector<std::int64_t>{5, 10, 15, 20};
  bool ret_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> rw(uniform_index(rng, 15));
    for (double& x : rw) x = uniform_real(rng) * 2 - 1;
    const auto a = compute_returns(rw, c.gamma);
    const auto b = oracle::returns(rw, 0.9);
    for (std::size_t i = 0; i < a.size(); ++i) ret_ok &= std::abs(a[i] - b[i]) < 1e-12;
  }
  return {psi_ok && sel_ok && sync_ok && ret_ok && c.gamma == 0.9 && c.target_update_period == 5,
          std::string("psi sums ") + (psi_ok ? "ok" : "bad") + ", selection " + (sel_ok ? "ok" : "bad") +
              ", target syncs at 5/10/15/20 " + (sync_ok ? "ok" : "bad") + ", returns " + (ret_ok ? "ok" : "bad")};
}

Outcome criterion6() {
  const auto t0 = Clock::now();
  const Vocabulary v = Vocabulary::standard();
  const std::vector<std::string> tasks{"click-button", "enter-text"};
  const auto demos = processed_demos(tasks, 150, 0, RefMode::kOrdered);
  RlConfig c;
  PolicyParams p = PolicyParams::init(1);
  train_bc(p, build_bc_examples(demos, v).examples, v, c, 300, 1);
  NetworkPolicy policy(p, v);
  const EvalReport before = evaluate_accuracy(policy, tasks, 100, 700'000, RefMode::kOrdered, Ablation::kNone, "bc");
  const double bc_time = seconds_since(t0);

  AlternatingOptions opt;
  opt.tasks = {"click-button"};
  opt.evaluate = false;
  run_alternating(p, v, demos, c, {{0, 640}}, opt);
  const double after =
      evaluate_accuracy(policy, {"click-button"}, 100, 700'000, RefMode::kOrdered, Ablation::kNone, "rl").average;
  const double cb = before.per_task_accuracy.at("click-button");
  const double et = before.per_task_accuracy.at("enter-text");
  const double drop = cb - after;
  return {cb >= 0.9 && et >= 0.9 && bc_time < 300 && drop <= 0.10,
          "BC click-button=" + fmt(cb, 2) + " enter-text=" + fmt(et, 2) + " in " + fmt(bc_time, 1) +
              "s; after online V-MPO click-button=" + fmt(after, 2) + " (drop " + fmt(drop * 100, 1) + " points)"};
}

Outcome criterion7() {
  const auto t0 = Clock::now();
  AttackConfig ac;
  ac.tasks = task_registry();
  ac.bc_steps = 400;
  ac.eval_episodes = 100;
  ac.eval_seed = 800'000;
  ac.seed = 2;
  const auto reports = run_ref_attack(processed_demos(ac.tasks, 150, 0, RefMode::kOrdered),
                                      processed_demos(ac.tasks, 150, 0, RefMode::kRandomized), ac);
  const double t = seconds_since(t0);
  double baseline_drop = 0, tiny_drop = 1;
  std::ostringstream d;
  for (const auto& r : reports) {
    if (r.policy == "baseline" && r.trained_on == RefMode::kOrdered) baseline_drop = r.drop;
    if (r.policy == "tiny" && r.trained_on == RefMode::kRandomized) tiny_drop = r.drop;
    d << r.policy << "/" << to_string(r.trained_on) << " " << fmt(r.accuracy_ordered_test, 3) << "->"
      << fmt(r.accuracy_randomized_test, 3) << "; ";
  }
  d << "in " << fmt(t, 1) << "s";
  return {baseline_drop >= 0.10 && tiny_drop < 0.05 && t < 600, d.str()};
}

Outcome criterion8() {
  const Vocabulary v = Vocabulary::standard();
  // Exact feature diff on states visited by oracle runs.
  bool diff_ok = true;
  for (const auto& task : task_registry()) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto [env, obs] = reset(task, seed, RefMode::kOrdered);
      const Plan plan = translate_utterance(task, env.utterance);
      std::vector<Action> history;
      for (const auto& sa : oracle_script(env)) {
        const Observation o = env.observe();
        const std::string& sub = plan.subtasks[static_cast<std::size_t>(sa.phase)];
        const auto full = encode_features(o, history, sub, Ablation::kNone, v).values;
        const auto check = [&](Ablation a, int lo, int hi) {
          const auto g = encode_features(o, history, sub, a, v).values;
          for (int i = 0; i < kFeatureDim; ++i) {
            if ((i < lo || i >= hi) && g[static_cast<std::size_t>(i)] != full[static_cast<std::size_t>(i)]) diff_ok = false;
          }
        };
        check(Ablation::kNoHistory, kHistoryOffset, kHistoryOffset + kHistoryDim);
        check(Ablation::kNoVision, kRasterOffset, kRasterOffset + kRasterDim);
        check(Ablation::kNoPlan, kSubtaskOffset, kDomOffset + kDomPooledDim);
        step(env, sa.action);
        history.push_back(sa.action);
      }
    }
  }
  PolicyParams p = PolicyParams::init(3);
  RlConfig c;
  train_bc(p, build_bc_examples(processed_demos(task_registry(), 150, 0, RefMode::kOrdered), v).examples, v, c, 400, 3);
  const auto reports = run_ablation([&](Ablation a) { return std::make_unique<NetworkPolicy>(p, v, a); },
                                    {Ablation::kNoHistory, Ablation::kNoVision, Ablation::kNoPlan}, task_registry(),
                                    100, 900'000, RefMode::kOrdered, "tiny");
  bool paired = reports.size() == 4;
  std::ostringstream d;
  for (const auto& r : reports) {
    paired &= r.seeds == reports[0].seeds && r.episodes_per_task == 100;
    d << to_string(r.ablation) << "=" << fmt(r.average, 3) << " ";
  }
  d << "(feature diff " << (diff_ok ? "exact" : "VIOLATED") << ", seeds " << (paired ? "paired" : "UNPAIRED") << ")";
  return {diff_ok && paired, d.str()};
}

Outcome criterion9() {
  Rng rng(99);
  const std::vector<std::string> words{"click", "ref", "type_text", "1", "2", "3", "4", "hello", "world"};
  int equal = 0;
  for (int i = 0; i < 100; ++i) {
    std::vector<std::string> a(uniform_index(rng, 10)), b(uniform_index(rng, 10));
    for (auto& w : a) w = pick(words, rng);
    for (auto& w : b) w = pick(words, rng);
    const RougeScores s = rouge_scores(a, b);
    if (s.rouge1_f1 == oracle::rouge1(a, b) && s.rougeL_f1 == oracle::rougeL(a, b)) ++equal;
  }
  const std::vector<std::string> same{"type_text", "ref", "7", "hello"};
  const RougeScores id = rouge_scores(same, same);
  return {equal == 100 && id.rouge1_f1 == 1.0 && id.rougeL_f1 == 1.0,
          std::to_string(equal) + "/100 pairs match the reference; identical sequences score " + fmt(id.rouge1_f1, 1) +
              "/" + fmt(id.rougeL_f1, 1)};
}

// Runs every CLI command in `dir` and returns the exit codes' sum.
int run_pipeline(const std::string& cli, const fs::path& dir) {
  fs::create_directories(dir);
  const std::vector<std::string> cmds = {
      "gen-demos --tasks all --count 12 --seed 3 --out demos.jsonl",
      "gen-demos --tasks all --count 12 --seed 3 --ref-mode randomized --out demos_rand.jsonl",
      "process --in demos.jsonl --cap 10 --seed 3 --out eps.jsonl",
      "process --in demos_rand.jsonl --cap 10 --seed 3 --out eps_rand.jsonl",
      "gen-plans --in eps.jsonl --seed 3 --out plans.jsonl",
      "stats --in eps.jsonl --seed 3 --out stats.csv",
      "train-bc --in eps.jsonl --steps 20 --seed 3 --loss-out loss.csv --out p.ckpt",
      "train-rl --policy p.ckpt --demos eps.jsonl --tasks click-button --schedule 5:70 --episodes 5 --seed 3 "
      "--metrics-out rl.csv --out p2.ckpt",
      "evaluate --policy p.ckpt --tasks all --episodes 5 --seed 7 --out eval.csv",
      "attack --ordered eps.jsonl --randomized eps_rand.jsonl --tasks click-button,enter-text --steps 10 "
      "--episodes 5 --seed 3 --out attack.json",
      "ablate --policy p.ckpt --tasks click-button,enter-text --episodes 5 --seed 7 --out ablate.csv",
      "report --in eval.csv --in ablate.csv --seed 7 --out report.csv"};
  int rc = 0;
  for (const auto& c : cmds) {
    const std::string line = "cd '" + dir.string() + "' && '" + cli + "' " + c + " > /dev/null 2>&1";
    const int r = std::system(line.c_str());
    if (r != 0) std::cerr << "command failed (" << r << "): " << c << "\n";
    rc += r != 0;
  }
  return rc;
}

std::string without_timestamp(const fs::path& p) {
  auto j = nlohmann::json::parse(read_file(p.string()));
  j.erase("timestamp");
  return j.dump();
}

Outcome criterion10(const std::string& cli, const fs::path& work) {
  fs::remove_all(work);
  const int rc = run_pipeline(cli, work / "run1") + run_pipeline(cli, work / "run2");
  int files = 0, manifests = 0, mismatches = 0;
  for (const auto& entry : fs::directory_iterator(work / "run1")) {
    const fs::path other = work / "run2" / entry.path().filename();
    const std::string name = entry.path().filename().string();
    const bool is_manifest = name.size() > 14 && name.substr(name.size() - 14) == ".manifest.json";
    bool same = fs::exists(other);
    if (same) {
      same = is_manifest ? without_timestamp(entry.path()) == without_timestamp(other)
                         : read_file(entry.path().string()) == read_file(other.string());
    }
    if (!same) {
      ++mismatches;
      std::cerr << "differs: " << name << "\n";
    }
    (is_manifest ? manifests : files)++;
  }
  return {rc == 0 && mismatches == 0 && manifests >= 12,
          "12 commands x2: " + std::to_string(files) + " outputs and " + std::to_string(manifests) +
              " manifests compared, " + std::to_string(mismatches) + " differences, " + std::to_string(rc) +
              " failed runs"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: acceptance <webnav_cli> <scratch dir>\n";
    return 2;
  }
  const std::string cli = fs::absolute(argv[1]).string();
  const fs::path work = fs::absolute(argv[2]);
  std::cout << "kernels: " << kernels::active().name << std::endl;
  report(1, "environment oracles", criterion1);
  report(2, "cleaning oracle and downsample cap", criterion2);
  report(3, "plan examples", criterion3);
  report(4, "gradient checks", criterion4);
  report(5, "V-MPO mechanics", criterion5);
  report(6, "behavioral cloning and online phase", criterion6);
  report(7, "reference randomization attack", criterion7);
  report(8, "ablation harness", criterion8);
  report(9, "ROUGE", criterion9);
  report(10, "CLI reproducibility", [&] { return criterion10(cli, work); });
  return failures == 0 ? 0 : 1;
}
