#include <algorithm>
#include <cmath>
#include <limits>

#include "webnav/agent.hpp"

namespace webnav {
namespace {

constexpr std::size_t kVocab = Vocabulary::kSize;

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double log_sigmoid(double z) { return -softplus(-z); }

// log-softmax denominators and probabilities of one slot.
double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::span<const double> slot_logits(const PolicyOutput& out, int slot) {
  return std::span<const double>(out.keydown_logits).subspan(static_cast<std::size_t>(slot) * kVocab, kVocab);
}

std::size_t draw(const std::vector<double>& probs, Rng& rng) {
  const double u = uniform_real(rng);
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

}  // namespace

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

std::vector<double> masked_ref_probs(const PolicyOutput& out, const DomSnapshot& snapshot) {
  if (snapshot.size() == 0) throw DecodeError("snapshot has no refs");
  std::vector<double> p(kMaxRefs, 0.0);
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& [ref, path] : snapshot.ref_index()) m = std::max(m, out.ref_logits[static_cast<std::size_t>(ref - 1)]);
  double z = 0.0;
  for (const auto& [ref, path] : snapshot.ref_index()) {
    const double e = std::exp(out.ref_logits[static_cast<std::size_t>(ref - 1)] - m);
    p[static_cast<std::size_t>(ref - 1)] = e;
    z += e;
  }
  for (double& x : p) x /= z;
  return p;
}

Decision decode_greedy(const PolicyOutput& out, const DomSnapshot& snapshot, const Vocabulary& vocab) {
  if (snapshot.size() == 0) throw DecodeError("snapshot has no refs");
  int best = 0;
  double best_logit = -std::numeric_limits<double>::infinity();
  for (const auto& [ref, path] : snapshot.ref_index()) {
    const double l = out.ref_logits[static_cast<std::size_t>(ref - 1)];
    if (l > best_logit) {
      best_logit = l;
      best = ref;
    }
  }
  Decision d;
  d.subtask_done = sigmoid(out.subtask_done_logit) > 0.5;
  if (sigmoid(out.action_type_logit) <= 0.5) {
    d.action = Action::click(best);
    return d;
  }
  std::array<int, kKeySlots> ids{};
  for (int s = 0; s < kKeySlots; ++s) {
    auto l = slot_logits(out, s);
    ids[static_cast<std::size_t>(s)] = static_cast<int>(std::max_element(l.begin(), l.end()) - l.begin());
  }
  d.action = Action::type_text(best, vocab.decode(ids));
  return d;
}

SampledAction sample_action(const PolicyOutput& out, const DomSnapshot& snapshot, const Vocabulary& vocab,
                            Rng& rng) {
  const std::vector<double> ref_p = masked_ref_probs(out, snapshot);
  SampledAction a;
  const double p_type = sigmoid(out.action_type_logit);
  a.type_text = uniform_real(rng) < p_type;
  const int ref = static_cast<int>(draw(ref_p, rng)) + 1;
  if (a.type_text) {
    for (int s = 0; s < kKeySlots; ++s) {
      auto l = slot_logits(out, s);
      const double lse = log_sum_exp(l);
      std::vector<double> p(kVocab);
      for (std::size_t i = 0; i < kVocab; ++i) p[i] = std::exp(l[i] - lse);
      a.slots[static_cast<std::size_t>(s)] = static_cast<int>(draw(p, rng));
    }
    a.action = Action::type_text(ref, vocab.decode(a.slots));
  } else {
    a.action = Action::click(ref);
  }
  a.log_prob = action_log_prob(out, snapshot, a);
  return a;
}

double action_log_prob(const PolicyOutput& out, const DomSnapshot& snapshot, const SampledAction& a,
                       OutputGrad* dout, double scale) {
  const double z = out.action_type_logit;
  double lp = a.type_text ? log_sigmoid(z) : log_sigmoid(-z);
  if (dout) dout->action_type += scale * ((a.type_text ? 1.0 : 0.0) - sigmoid(z));

  const std::vector<double> ref_p = masked_ref_probs(out, snapshot);
  const auto ri = static_cast<std::size_t>(a.action.ref - 1);
  if (ref_p.at(ri) <= 0.0) throw DecodeError("action ref is absent from the snapshot");
  lp += std::log(ref_p[ri]);
  if (dout) {
    for (const auto& [ref, path] : snapshot.ref_index()) {
      const auto i = static_cast<std::size_t>(ref - 1);
      dout->ref[i] += scale * ((i == ri ? 1.0 : 0.0) - ref_p[i]);
    }
  }

  if (a.type_text) {
    if (dout) dout->keydown_active = true;
    for (int s = 0; s < kKeySlots; ++s) {
      auto l = slot_logits(out, s);
      const double lse = log_sum_exp(l);
      const int tok = a.slots[static_cast<std::size_t>(s)];
      lp += l[static_cast<std::size_t>(tok)] - lse;
      if (dout) {
        double* g = dout->keydown.data() + static_cast<std::size_t>(s) * kVocab;
        for (std::size_t i = 0; i < kVocab; ++i) g[i] -= scale * std::exp(l[i] - lse);
        g[tok] += scale;
      }
    }
  }
  return lp;
}

std::array<int, kKeySlots> keydown_targets(const std::string& text, const Vocabulary& vocab) {
  const std::vector<int> ids = vocab.encode(text);
  if (ids.size() > static_cast<std::size_t>(kKeySlots)) {
    throw UnknownTokenError("typed text '" + text + "' needs more than 8 token slots");
  }
  std::array<int, kKeySlots> out{};
  out.fill(Vocabulary::kPad);
  std::copy(ids.begin(), ids.end(), out.begin());
  return out;
}

LossResult ce_loss(const PolicyOutput& out, const Target& target, const Vocabulary& vocab) {
  const Action& a = target.action;
  if (a.ref < 1 || a.ref > kMaxRefs) throw ContractError("target ref outside [1, 500]");
  LossResult r;
  const bool type = !a.is_click();

  const double zt = out.action_type_logit;
  r.loss += type ? softplus(-zt) : softplus(zt);
  r.grad.action_type = sigmoid(zt) - (type ? 1.0 : 0.0);

  const double lse = log_sum_exp(out.ref_logits);
  const auto ri = static_cast<std::size_t>(a.ref - 1);
  r.loss += lse - out.ref_logits[ri];
  for (std::size_t i = 0; i < out.ref_logits.size(); ++i) r.grad.ref[i] = std::exp(out.ref_logits[i] - lse);
  r.grad.ref[ri] -= 1.0;

  if (type) {
    const auto slots = keydown_targets(a.text, vocab);
    r.grad.keydown_active = true;
    for (int s = 0; s < kKeySlots; ++s) {
      auto l = slot_logits(out, s);
      const double slse = log_sum_exp(l);
      const auto tok = static_cast<std::size_t>(slots[static_cast<std::size_t>(s)]);
      r.loss += slse - l[tok];
      double* g = r.grad.keydown.data() + static_cast<std::size_t>(s) * kVocab;
      for (std::size_t i = 0; i < kVocab; ++i) g[i] = std::exp(l[i] - slse);
      g[tok] -= 1.0;
    }
  }

  const double zd = out.subtask_done_logit;
  r.loss += target.subtask_done ? softplus(-zd) : softplus(zd);
  r.grad.subtask_done = sigmoid(zd) - (target.subtask_done ? 1.0 : 0.0);
  return r;
}

PolicyDecision NetworkPolicy::act(const PolicyQuery& q) {
  const FeatureVector f = encode_features(q.observation, q.history, q.subtask, ablation_, vocab_);
  const PolicyOutput out = forward(params_, f);
  const Decision d = decode_greedy(out, q.observation.snapshot, vocab_);
  return {d.action, d.subtask_done};
}

PolicyDecision RandomClickPolicy::act(const PolicyQuery& q) {
  const auto refs = q.observation.snapshot.refs();
  return {Action::click(pick(refs, rng_)), false};
}

}  // namespace webnav
