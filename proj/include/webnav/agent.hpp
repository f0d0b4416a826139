#pragma once
// Feature encoding, the policy network with its four output heads, action
// decoding/sampling, the supervised loss, and the memorizing baseline.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "webnav/dom.hpp"
#include "webnav/env.hpp"
#include "webnav/episode.hpp"
#include "webnav/planner.hpp"
#include "webnav/util.hpp"

namespace webnav {

// ---------------------------------------------------------------------------
// Vocabulary

class Vocabulary {
 public:
  static constexpr int kSize = 1591;
  static constexpr int kPad = 0;

  // Most frequent tokens of `texts` first (ties broken lexicographically),
  // then the simulator lexicon, then placeholder entries up to kSize.
  static Vocabulary build(const std::vector<std::string>& texts);
  static Vocabulary from_lines(const std::vector<std::string>& lines);
  static Vocabulary standard();

  std::optional<int> index(const std::string& token) const;
  const std::string& token(int index) const { return tokens_.at(static_cast<std::size_t>(index)); }
  int size() const { return static_cast<int>(tokens_.size()); }

  // Throws UnknownTokenError for tokens outside the vocabulary.
  std::vector<int> encode(const std::string& text) const;
  // Joins tokens up to the first PAD with single spaces.
  std::string decode(std::span<const int> ids) const;
  std::string to_text() const;  // one token per line

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> lookup_;
};

// ---------------------------------------------------------------------------
// Features

inline constexpr int kUtteranceDim = 256;
inline constexpr int kSubtaskDim = 256;
inline constexpr int kDomPooledDim = 128;
inline constexpr int kRasterDim = kRasterCells;
inline constexpr int kHistoryDim = 64;
inline constexpr int kFeatureDim = kUtteranceDim + kSubtaskDim + kDomPooledDim + kRasterDim + kHistoryDim;

inline constexpr int kUtteranceOffset = 0;
inline constexpr int kSubtaskOffset = kUtteranceOffset + kUtteranceDim;
inline constexpr int kDomOffset = kSubtaskOffset + kSubtaskDim;
inline constexpr int kRasterOffset = kDomOffset + kDomPooledDim;
inline constexpr int kHistoryOffset = kRasterOffset + kRasterDim;

inline constexpr int kCandidateDim = 32;
inline constexpr int kCopyPositions = 16;
inline constexpr int kKeySlots = 8;
inline constexpr int kHistoryActions = 4;

enum class Ablation { kNone, kNoHistory, kNoVision, kNoPlan };
std::string to_string(Ablation a);
Ablation parse_ablation(const std::string& s);

struct Candidate {
  int ref = 0;
  std::array<double, kCandidateDim> x{};
};

struct FeatureVector {
  std::vector<double> values;        // kFeatureDim
  std::vector<Candidate> candidates;  // one row per ref in the snapshot
  std::array<int, kCopyPositions> copy_tokens{};  // vocab ids of the subtask, -1 = none
};

FeatureVector encode_features(const Observation& obs, const std::vector<Action>& history,
                              const std::string& subtask, Ablation ablation, const Vocabulary& vocab);

// ---------------------------------------------------------------------------
// Parameters

inline constexpr int kHiddenDim = 128;

enum class Tensor {
  kW1, kB1, kTypeW, kTypeB, kRefBias, kQueryW, kQueryB,
  kCopyW, kCopyB, kKeyBias, kDoneW, kDoneB, kValueW, kValueB, kCount
};

struct TensorInfo {
  const char* name;
  std::size_t offset;
  std::size_t rows;
  std::size_t cols;
  bool is_bias;
  std::size_t size() const { return rows * cols; }
};

const std::array<TensorInfo, static_cast<std::size_t>(Tensor::kCount)>& param_layout();
std::size_t param_count();

class PolicyParams {
 public:
  PolicyParams() : data_(param_count(), 0.0) {}
  static PolicyParams init(std::uint64_t seed);

  std::span<const double> view(Tensor t) const;
  std::span<double> view(Tensor t);
  std::span<const double> data() const { return data_; }
  std::span<double> mutable_data() {
    ++version_;
    return data_;
  }
  // Throws NumericError on NaN/Inf; the result is cached per version.
  void check_finite() const;

 private:
  std::vector<double> data_;
  std::uint64_t version_ = 1;
  mutable std::uint64_t verified_version_ = 0;
};

void save_checkpoint(const std::string& path, const PolicyParams& params);
PolicyParams load_checkpoint(const std::string& path);

// ---------------------------------------------------------------------------
// Forward / backward

struct PolicyOutput {
  double action_type_logit = 0.0;
  std::vector<double> ref_logits;      // index r-1 holds ref r
  std::vector<double> keydown_logits;  // slot-major, kKeySlots x vocab
  double subtask_done_logit = 0.0;
  double value = 0.0;                  // value-baseline head

  double keydown(int slot, int token) const {
    return keydown_logits[static_cast<std::size_t>(slot) * Vocabulary::kSize + static_cast<std::size_t>(token)];
  }
};

struct ForwardCache {
  std::vector<double> hidden;  // tanh activations
  std::vector<double> query;
  std::vector<double> copy;    // kKeySlots x kCopyPositions
};

PolicyOutput forward(const PolicyParams& params, const FeatureVector& f, ForwardCache* cache = nullptr);

// Gradient of some scalar with respect to the outputs.
struct OutputGrad {
  double action_type = 0.0;
  std::vector<double> ref = std::vector<double>(kMaxRefs, 0.0);
  std::vector<double> keydown = std::vector<double>(static_cast<std::size_t>(kKeySlots) * Vocabulary::kSize, 0.0);
  double subtask_done = 0.0;
  double value = 0.0;
  bool keydown_active = false;  // false: keydown is all zeros
};

// Accumulates d(scalar)/d(params) into `grad` (size param_count()).
void backward(const PolicyParams& params, const FeatureVector& f, const ForwardCache& cache,
              const OutputGrad& dout, std::span<double> grad);

// ---------------------------------------------------------------------------
// Decoding, sampling and the supervised loss

struct Decision {
  Action action;
  bool subtask_done = false;
};

double sigmoid(double z);

// Softmax over the refs present in `snapshot`; entries for absent refs are 0.
std::vector<double> masked_ref_probs(const PolicyOutput& out, const DomSnapshot& snapshot);

Decision decode_greedy(const PolicyOutput& out, const DomSnapshot& snapshot, const Vocabulary& vocab);

struct SampledAction {
  Action action;
  bool type_text = false;
  std::array<int, kKeySlots> slots{};  // sampled keydown tokens (type_text only)
  double log_prob = 0.0;
};

SampledAction sample_action(const PolicyOutput& out, const DomSnapshot& snapshot, const Vocabulary& vocab,
                            Rng& rng);

// log pi(a|s) of a sampled action under `out`, with its gradient with
// respect to the outputs added into `dout` scaled by `scale`.
double action_log_prob(const PolicyOutput& out, const DomSnapshot& snapshot, const SampledAction& a,
                       OutputGrad* dout = nullptr, double scale = 1.0);

struct Target {
  Action action;
  bool subtask_done = false;
};

struct LossResult {
  double loss = 0.0;
  OutputGrad grad;
};

// BCE(type) + CE(ref, 500-way) + sum of 8 keydown slot CEs (type targets
// only) + BCE(done). Throws UnknownTokenError for out-of-vocabulary text.
LossResult ce_loss(const PolicyOutput& out, const Target& target, const Vocabulary& vocab);

// Keydown slot targets: token ids padded with PAD. Throws when the text
// needs more than kKeySlots tokens or has unknown words.
std::array<int, kKeySlots> keydown_targets(const std::string& text, const Vocabulary& vocab);

// ---------------------------------------------------------------------------
// Policies

class NetworkPolicy : public AgentPolicy {
 public:
  NetworkPolicy(const PolicyParams& params, const Vocabulary& vocab, Ablation ablation = Ablation::kNone)
      : params_(params), vocab_(vocab), ablation_(ablation) {}
  PolicyDecision act(const PolicyQuery& q) override;

 private:
  const PolicyParams& params_;
  const Vocabulary& vocab_;
  Ablation ablation_;
};

// Uniform over present refs, clicks only.
class RandomClickPolicy : public AgentPolicy {
 public:
  explicit RandomClickPolicy(std::uint64_t seed) : rng_(seed) {}
  PolicyDecision act(const PolicyQuery& q) override;

 private:
  Rng rng_;
};

// Ignores the page: for each (task, step index) replays the most frequent
// training action. Ties go to the lower ref.
class MemorizingBaseline : public AgentPolicy {
 public:
  PolicyDecision act(const PolicyQuery& q) override;
  std::optional<Action> predict(const std::string& task, std::size_t step_index) const;

  friend MemorizingBaseline memorizing_baseline_fit(const std::vector<ProcessedEpisode>& dataset);

 private:
  std::map<std::string, std::vector<Action>> table_;
};

MemorizingBaseline memorizing_baseline_fit(const std::vector<ProcessedEpisode>& dataset);

}  // namespace webnav
