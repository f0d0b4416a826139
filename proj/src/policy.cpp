#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "webnav/agent.hpp"
#include "webnav/kernels.hpp"

namespace webnav {
namespace {

constexpr std::size_t kKeyCols = static_cast<std::size_t>(kKeySlots) * Vocabulary::kSize;
constexpr std::size_t kCopyRows = static_cast<std::size_t>(kKeySlots) * kCopyPositions;
constexpr char kCheckpointMagic[] = "WEBNAV-CKPT1\n";

std::array<TensorInfo, static_cast<std::size_t>(Tensor::kCount)> make_layout() {
  std::array<TensorInfo, static_cast<std::size_t>(Tensor::kCount)> t{};
  const std::size_t h = kHiddenDim;
  const std::array<std::tuple<const char*, std::size_t, std::size_t, bool>, static_cast<std::size_t>(Tensor::kCount)> spec = {{
      {"hidden.weight", h, kFeatureDim, false},
      {"hidden.bias", h, 1, true},
      {"action_type.weight", 1, h, false},
      {"action_type.bias", 1, 1, true},
      {"ref.bias", kMaxRefs, 1, true},
      {"ref_query.weight", kCandidateDim, h, false},
      {"ref_query.bias", kCandidateDim, 1, true},
      {"keydown_copy.weight", kCopyRows, h, false},
      {"keydown_copy.bias", kCopyRows, 1, true},
      {"keydown.bias", kKeyCols, 1, true},
      {"subtask_done.weight", 1, h, false},
      {"subtask_done.bias", 1, 1, true},
      {"value.weight", 1, h, false},
      {"value.bias", 1, 1, true},
  }};
  std::size_t offset = 0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const auto& [name, rows, cols, bias] = spec[i];
    t[i] = {name, offset, rows, cols, bias};
    offset += rows * cols;
  }
  return t;
}

const TensorInfo& info(Tensor t) { return param_layout()[static_cast<std::size_t>(t)]; }

std::span<double> grad_view(std::span<double> grad, Tensor t) {
  return grad.subspan(info(t).offset, info(t).size());
}

}  // namespace

const std::array<TensorInfo, static_cast<std::size_t>(Tensor::kCount)>& param_layout() {
  static const auto layout = make_layout();
  return layout;
}

std::size_t param_count() {
  const auto& l = param_layout();
  return l.back().offset + l.back().size();
}

std::span<const double> PolicyParams::view(Tensor t) const {
  return std::span<const double>(data_).subspan(info(t).offset, info(t).size());
}

std::span<double> PolicyParams::view(Tensor t) {
  ++version_;
  return std::span<double>(data_).subspan(info(t).offset, info(t).size());
}

void PolicyParams::check_finite() const {
  if (verified_version_ == version_) return;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw NumericError("non-finite parameter at flat index " + std::to_string(i));
    }
  }
  verified_version_ = version_;
}

PolicyParams PolicyParams::init(std::uint64_t seed) {
  PolicyParams p;
  Rng rng(mix_seed(seed, 0x1417ULL));
  for (const TensorInfo& t : param_layout()) {
    if (t.is_bias) continue;
    const double limit = std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
    auto w = std::span<double>(p.data_).subspan(t.offset, t.size());
    for (double& x : w) x = (2.0 * uniform_real(rng) - 1.0) * limit;
  }
  ++p.version_;
  return p;
}

PolicyOutput forward(const PolicyParams& params, const FeatureVector& f, ForwardCache* cache) {
  params.check_finite();
  if (f.values.size() != static_cast<std::size_t>(kFeatureDim)) {
    throw ContractError("feature vector has the wrong dimension");
  }
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;

  std::vector<double>& h = c.hidden;
  h.assign(params.view(Tensor::kB1).begin(), params.view(Tensor::kB1).end());
  kernels::gemv_add(params.view(Tensor::kW1), kHiddenDim, kFeatureDim, f.values, h);
  for (double& x : h) x = std::tanh(x);

  PolicyOutput out;
  out.action_type_logit = kernels::dot(params.view(Tensor::kTypeW), h) + params.view(Tensor::kTypeB)[0];
  out.subtask_done_logit = kernels::dot(params.view(Tensor::kDoneW), h) + params.view(Tensor::kDoneB)[0];
  out.value = kernels::dot(params.view(Tensor::kValueW), h) + params.view(Tensor::kValueB)[0];

  c.query.assign(params.view(Tensor::kQueryB).begin(), params.view(Tensor::kQueryB).end());
  kernels::gemv_add(params.view(Tensor::kQueryW), kCandidateDim, kHiddenDim, h, c.query);
  out.ref_logits.assign(params.view(Tensor::kRefBias).begin(), params.view(Tensor::kRefBias).end());
  for (const Candidate& cand : f.candidates) {
    out.ref_logits[static_cast<std::size_t>(cand.ref - 1)] += kernels::dot(c.query, cand.x);
  }

  c.copy.assign(params.view(Tensor::kCopyB).begin(), params.view(Tensor::kCopyB).end());
  kernels::gemv_add(params.view(Tensor::kCopyW), kCopyRows, kHiddenDim, h, c.copy);
  out.keydown_logits.assign(params.view(Tensor::kKeyBias).begin(), params.view(Tensor::kKeyBias).end());
  for (int s = 0; s < kKeySlots; ++s) {
    for (int i = 0; i < kCopyPositions; ++i) {
      const int tok = f.copy_tokens[static_cast<std::size_t>(i)];
      if (tok < 0) continue;
      out.keydown_logits[static_cast<std::size_t>(s) * Vocabulary::kSize + static_cast<std::size_t>(tok)] +=
          c.copy[static_cast<std::size_t>(s * kCopyPositions + i)];
    }
  }
  return out;
}

void backward(const PolicyParams& params, const FeatureVector& f, const ForwardCache& cache,
              const OutputGrad& dout, std::span<double> grad) {
  const std::vector<double>& h = cache.hidden;
  std::vector<double> dh(kHiddenDim, 0.0);

  auto scalar_head = [&](Tensor w, Tensor b, double d) {
    if (d == 0.0) return;
    kernels::axpy(d, h, grad_view(grad, w));
    grad_view(grad, b)[0] += d;
    kernels::axpy(d, params.view(w), dh);
  };
  scalar_head(Tensor::kTypeW, Tensor::kTypeB, dout.action_type);
  scalar_head(Tensor::kDoneW, Tensor::kDoneB, dout.subtask_done);
  scalar_head(Tensor::kValueW, Tensor::kValueB, dout.value);

  kernels::axpy(1.0, dout.ref, grad_view(grad, Tensor::kRefBias));
  std::vector<double> dq(kCandidateDim, 0.0);
  for (const Candidate& cand : f.candidates) {
    const double g = dout.ref[static_cast<std::size_t>(cand.ref - 1)];
    if (g != 0.0) kernels::axpy(g, cand.x, dq);
  }
  kernels::outer_add(dq, h, grad_view(grad, Tensor::kQueryW));
  kernels::axpy(1.0, dq, grad_view(grad, Tensor::kQueryB));
  kernels::gemv_t_add(params.view(Tensor::kQueryW), kCandidateDim, kHiddenDim, dq, dh);

  if (dout.keydown_active) {
    kernels::axpy(1.0, dout.keydown, grad_view(grad, Tensor::kKeyBias));
    std::vector<double> dc(kCopyRows, 0.0);
    for (int s = 0; s < kKeySlots; ++s) {
      for (int i = 0; i < kCopyPositions; ++i) {
        const int tok = f.copy_tokens[static_cast<std::size_t>(i)];
        if (tok < 0) continue;
        dc[static_cast<std::size_t>(s * kCopyPositions + i)] =
            dout.keydown[static_cast<std::size_t>(s) * Vocabulary::kSize + static_cast<std::size_t>(tok)];
      }
    }
    kernels::outer_add(dc, h, grad_view(grad, Tensor::kCopyW));
    kernels::axpy(1.0, dc, grad_view(grad, Tensor::kCopyB));
    kernels::gemv_t_add(params.view(Tensor::kCopyW), kCopyRows, kHiddenDim, dc, dh);
  }

  std::vector<double> dz(kHiddenDim);
  for (std::size_t i = 0; i < dz.size(); ++i) dz[i] = dh[i] * (1.0 - h[i] * h[i]);
  kernels::outer_add(dz, f.values, grad_view(grad, Tensor::kW1));
  kernels::axpy(1.0, dz, grad_view(grad, Tensor::kB1));
}

void save_checkpoint(const std::string& path, const PolicyParams& params) {
  nlohmann::json header;
  header["format"] = "webnav-policy";
  header["version"] = 1;
  header["count"] = param_count();
  header["tensors"] = nlohmann::json::array();
  for (const TensorInfo& t : param_layout()) {
    header["tensors"].push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}, {"bias", t.is_bias}});
  }
  std::string out = kCheckpointMagic;
  out += header.dump();
  out += '\n';
  const auto data = params.data();
  const std::size_t bytes = data.size() * sizeof(double);
  const std::size_t start = out.size();
  out.resize(start + bytes);
  std::memcpy(out.data() + start, data.data(), bytes);
  write_file(path, out);
}

PolicyParams load_checkpoint(const std::string& path) {
  const std::string raw = read_file(path);
  const std::string magic = kCheckpointMagic;
  if (raw.compare(0, magic.size(), magic) != 0) throw ParseError(path + ": not a policy checkpoint");
  const std::size_t nl = raw.find('\n', magic.size());
  if (nl == std::string::npos) throw ParseError(path + ": truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(raw.substr(magic.size(), nl - magic.size()));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": bad header: " + e.what());
  }
  const auto& layout = param_layout();
  if (!header.contains("tensors") || header["tensors"].size() != layout.size()) {
    throw ParseError(path + ": tensor list does not match this build");
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& t = header["tensors"][i];
    if (t.value("name", "") != layout[i].name || t.value("rows", 0u) != layout[i].rows ||
        t.value("cols", 0u) != layout[i].cols) {
      throw ParseError(path + ": tensor " + std::to_string(i) + " shape mismatch");
    }
  }
  const std::size_t bytes = param_count() * sizeof(double);
  if (raw.size() - (nl + 1) != bytes) throw ParseError(path + ": payload size mismatch");
  PolicyParams p;
  std::memcpy(p.mutable_data().data(), raw.data() + nl + 1, bytes);
  p.check_finite();
  return p;
}

}  // namespace webnav
