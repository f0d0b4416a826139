#include <gtest/gtest.h>

#include "oracles.hpp"
#include "webnav/agent.hpp"
#include "webnav/eval.hpp"

using namespace webnav;

namespace {

PolicyParams noisy_params(std::uint64_t seed) {
  PolicyParams p = PolicyParams::init(seed);
  Rng rng(seed + 1);
  for (double& v : p.mutable_data()) v += (uniform_real(rng) - 0.5) * 0.1;
  return p;
}

double total_ce(const PolicyParams& p, const FeatureVector& f, const Target& t, const Vocabulary& v) {
  return ce_loss(forward(p, f), t, v).loss;
}

}  // namespace

TEST(Vocab, SizeAndRoundTrip) {
  const Vocabulary v = Vocabulary::standard();
  EXPECT_EQ(v.size(), 1591);
  EXPECT_EQ(v.token(Vocabulary::kPad), "<pad>");
  const auto ids = v.encode("hello world");
  EXPECT_EQ(v.decode(ids), "hello world");
  std::vector<int> padded = ids;
  padded.push_back(Vocabulary::kPad);
  padded.push_back(ids[0]);
  EXPECT_EQ(v.decode(padded), "hello world");
  EXPECT_THROW(v.encode("zzzqqqx"), UnknownTokenError);
  std::vector<std::string> lines;
  for (int i = 0; i < v.size(); ++i) lines.push_back(v.token(i));
  EXPECT_EQ(Vocabulary::from_lines(lines).to_text(), v.to_text());
}

TEST(Vocab, CoversSimulatorLexicon) {
  const Vocabulary v = Vocabulary::standard();
  for (const auto& w : simulator_lexicon()) EXPECT_TRUE(v.index(w).has_value()) << w;
}

TEST(Params, LayoutAndBudget) {
  EXPECT_LT(param_count(), 300'000u);
  std::size_t total = 0;
  for (const auto& t : param_layout()) {
    EXPECT_EQ(t.offset, total);
    total += t.size();
  }
  EXPECT_EQ(total, param_count());
}

TEST(Params, InitDeterministicAndBiasesZero) {
  const PolicyParams a = PolicyParams::init(3);
  const PolicyParams b = PolicyParams::init(3);
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
  for (const auto& t : param_layout()) {
    if (!t.is_bias) continue;
    for (std::size_t i = t.offset; i < t.offset + t.size(); ++i) ASSERT_EQ(a.data()[i], 0.0) << t.name;
  }
}

TEST(Params, CheckFinite) {
  PolicyParams p = PolicyParams::init(1);
  EXPECT_NO_THROW(p.check_finite());
  p.mutable_data()[10] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(p.check_finite(), NumericError);
}

TEST(Params, CheckpointRoundTrip) {
  const PolicyParams p = noisy_params(4);
  const std::string path = ::testing::TempDir() + "/p.ckpt";
  save_checkpoint(path, p);
  const PolicyParams q = load_checkpoint(path);
  EXPECT_TRUE(std::equal(p.data().begin(), p.data().end(), q.data().begin()));
  write_file(path, "garbage");
  EXPECT_THROW(load_checkpoint(path), ParseError);
}

TEST(Features, DimensionsAndCandidates) {
  const Vocabulary v = Vocabulary::standard();
  for (const auto& task : task_registry()) {
    auto [env, obs] = reset(task, 0, RefMode::kRandomized);
    const FeatureVector f = encode_features(obs, {}, env.utterance, Ablation::kNone, v);
    EXPECT_EQ(f.values.size(), static_cast<std::size_t>(kFeatureDim));
    EXPECT_EQ(f.candidates.size(), env.snapshot.size());
  }
}

TEST(Features, AblationsTouchOnlyTheirBlocks) {
  const Vocabulary v = Vocabulary::standard();
  for (const auto& task : task_registry()) {
    auto [env, obs] = reset(task, 5, RefMode::kOrdered);
    const auto script = oracle_script(env);
    const std::vector<Action> history{script.front().action};
    const std::string subtask = translate_utterance(task, env.utterance).subtasks.back();
    const FeatureVector full = encode_features(obs, history, subtask, Ablation::kNone, v);
    const auto check = [&](Ablation a, int lo, int hi) -> FeatureVector {
      const FeatureVector g = encode_features(obs, history, subtask, a, v);
      for (int i = 0; i < kFeatureDim; ++i) {
        if (i < lo || i >= hi) EXPECT_EQ(g.values[static_cast<std::size_t>(i)], full.values[static_cast<std::size_t>(i)]) << to_string(a) << " " << i;
      }
      return g;
    };
    const auto nh = check(Ablation::kNoHistory, kHistoryOffset, kHistoryOffset + kHistoryDim);
    for (int i = kHistoryOffset; i < kHistoryOffset + kHistoryDim; ++i) EXPECT_EQ(nh.values[static_cast<std::size_t>(i)], 0.0);
    const auto nv = check(Ablation::kNoVision, kRasterOffset, kRasterOffset + kRasterDim);
    for (int i = kRasterOffset; i < kRasterOffset + kRasterDim; ++i) EXPECT_EQ(nv.values[static_cast<std::size_t>(i)], 0.0);
    // The plan channel covers the subtask text and the subtask-conditioned DOM pooling.
    const auto np = check(Ablation::kNoPlan, kSubtaskOffset, kDomOffset + kDomPooledDim);
    const FeatureVector as_utterance = encode_features(obs, history, env.utterance, Ablation::kNone, v);
    EXPECT_EQ(np.values, as_utterance.values);
  }
}

TEST(Heads, OutputShapes) {
  const Vocabulary v = Vocabulary::standard();
  auto [env, obs] = reset("enter-text", 0, RefMode::kOrdered);
  const PolicyOutput out = forward(PolicyParams::init(0), encode_features(obs, {}, env.utterance, Ablation::kNone, v));
  EXPECT_EQ(out.ref_logits.size(), static_cast<std::size_t>(kMaxRefs));
  EXPECT_EQ(out.keydown_logits.size(), static_cast<std::size_t>(kKeySlots * Vocabulary::kSize));
}

TEST(Heads, MaskedProbsSumToOneOverPresentRefs) {
  const Vocabulary v = Vocabulary::standard();
  auto [env, obs] = reset("book-flight-simplified", 0, RefMode::kRandomized);
  const PolicyOutput out = forward(noisy_params(1), encode_features(obs, {}, "x", Ablation::kNone, v));
  const auto p = masked_ref_probs(out, env.snapshot);
  double s = 0;
  for (int r = 1; r <= kMaxRefs; ++r) {
    if (!env.snapshot.contains(r)) EXPECT_EQ(p[static_cast<std::size_t>(r - 1)], 0.0);
    s += p[static_cast<std::size_t>(r - 1)];
  }
  EXPECT_NEAR(s, 1.0, 1e-12);
  const Decision d = decode_greedy(out, env.snapshot, v);
  EXPECT_TRUE(env.snapshot.contains(d.action.ref));
}

TEST(Heads, SampledLogProbConsistent) {
  const Vocabulary v = Vocabulary::standard();
  auto [env, obs] = reset("enter-text", 1, RefMode::kOrdered);
  const PolicyOutput out = forward(noisy_params(2), encode_features(obs, {}, env.utterance, Ablation::kNone, v));
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const SampledAction a = sample_action(out, env.snapshot, v, rng);
    EXPECT_TRUE(env.snapshot.contains(a.action.ref));
    EXPECT_NEAR(action_log_prob(out, env.snapshot, a), a.log_prob, 1e-9);
  }
}

TEST(Loss, KeydownTargets) {
  const Vocabulary v = Vocabulary::standard();
  const auto t = keydown_targets("hello world", v);
  EXPECT_EQ(t[0], *v.index("hello"));
  EXPECT_EQ(t[1], *v.index("world"));
  for (int s = 2; s < kKeySlots; ++s) EXPECT_EQ(t[static_cast<std::size_t>(s)], Vocabulary::kPad);
  EXPECT_THROW(keydown_targets("a a a a a a a a a", v), Error);
}

TEST(Loss, ClickTargetHasNoKeydownTerm) {
  const Vocabulary v = Vocabulary::standard();
  auto [env, obs] = reset("click-button", 0, RefMode::kOrdered);
  const PolicyOutput out = forward(noisy_params(3), encode_features(obs, {}, env.utterance, Ablation::kNone, v));
  const LossResult r = ce_loss(out, {Action::click(2), false}, v);
  EXPECT_FALSE(r.grad.keydown_active);
  EXPECT_GT(r.loss, 0.0);
}

TEST(Loss, GradientMatchesFiniteDifferences) {
  const Vocabulary v = Vocabulary::standard();
  Rng rng(17);
  for (int inst = 0; inst < 20; ++inst) {
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

    std::vector<double> dir(param_count());
    for (double& d : dir) d = uniform_real(rng) * 2 - 1;
    double analytic = 0;
    for (std::size_t i = 0; i < dir.size(); ++i) analytic += g[i] * dir[i];
    const double h = 1e-6;
    PolicyParams plus = p, minus = p;
    {
      auto pp = plus.mutable_data();
      auto pm = minus.mutable_data();
      for (std::size_t i = 0; i < dir.size(); ++i) {
        pp[i] += h * dir[i];
        pm[i] -= h * dir[i];
      }
    }
    const double numeric = (total_ce(plus, f, t, v) - total_ce(minus, f, t, v)) / (2 * h);
    EXPECT_LT(oracle::rel_err(analytic, numeric), 1e-4) << "instance " << inst;
  }
}

TEST(Baseline, ReplaysMostFrequentActionPerStep) {
  std::vector<ProcessedEpisode> ds;
  auto mk = [](std::vector<Action> acts) {
    ProcessedEpisode e;
    e.task = "click-button";
    for (auto& a : acts) e.steps.push_back({DomSnapshot(), a});
    return e;
  };
  ds.push_back(mk({Action::click(3)}));
  ds.push_back(mk({Action::click(5), Action::click(7)}));
  ds.push_back(mk({Action::click(5)}));
  ds.push_back(mk({Action::click(3)}));
  const MemorizingBaseline b = memorizing_baseline_fit(ds);
  EXPECT_EQ(*b.predict("click-button", 0), Action::click(3));  // tie 2-2, lower ref
  EXPECT_EQ(*b.predict("click-button", 1), Action::click(7));
  EXPECT_EQ(*b.predict("click-button", 2), Action::click(7));  // past the longest episode: last step
  EXPECT_FALSE(b.predict("enter-text", 0).has_value());
}

TEST(Baseline, OrderedBeatsRandomizedOnSameSeeds) {
  MemorizingBaseline b = memorizing_baseline_fit(oracle_dataset(task_registry(), 50, 0, RefMode::kOrdered));
  const double ordered =
      evaluate_accuracy(b, task_registry(), 50, 9000, RefMode::kOrdered, Ablation::kNone, "b").average;
  const double randomized =
      evaluate_accuracy(b, task_registry(), 50, 9000, RefMode::kRandomized, Ablation::kNone, "b").average;
  EXPECT_GT(ordered, randomized);
}
