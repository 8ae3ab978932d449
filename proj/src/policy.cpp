#include "climadapt/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace climadapt {

void PolicyConfig::validate() const {
  if (hidden < 1) throw ConfigError("policy.hidden: must be >= 1");
  if (layers < 0) throw ConfigError("policy.layers: must be >= 0");
  if (!(feature_clip > 0.0)) throw ConfigError("policy.feature_clip: must be > 0");
}

void RunningNorm::add(std::span<const double> impacts) {
  count += 1.0;
  for (std::size_t f = 0; f < 3; ++f) {
    const double delta = impacts[f] - mean[f];
    mean[f] += delta / count;
    m2[f] += delta * (impacts[f] - mean[f]);
  }
}

void RunningNorm::merge(const RunningNorm& other) {
  if (other.count == 0.0) return;
  if (count == 0.0) {
    *this = other;
    return;
  }
  const double n = count + other.count;
  for (std::size_t f = 0; f < 3; ++f) {
    const double delta = other.mean[f] - mean[f];
    mean[f] += delta * other.count / n;
    m2[f] += other.m2[f] + delta * delta * count * other.count / n;
  }
  count = n;
}

double RunningNorm::stddev(int f) const {
  if (count <= 0.0) return 1.0;
  return std::sqrt(m2[static_cast<std::size_t>(f)] / count + 1e-8);
}

Eigen::Index GraphPolicy::add_tensor(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  const Eigen::Index offset = tensors_.empty() ? 0 : tensors_.back().offset + tensors_.back().rows * tensors_.back().cols;
  tensors_.push_back({name, rows, cols, offset});
  return offset;
}

Eigen::Map<const Eigen::MatrixXd> GraphPolicy::mat(Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) const {
  return Eigen::Map<const Eigen::MatrixXd>(params_.data() + offset, rows, cols);
}

GraphPolicy::GraphPolicy(PolicyConfig config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const Eigen::Index h = config_.hidden;
  auto build_trunk = [&](const std::string& prefix) {
    Trunk t;
    t.enc_w = add_tensor(prefix + ".encoder.weight", kPolicyInputs, h);
    t.enc_b = add_tensor(prefix + ".encoder.bias", 1, h);
    for (int l = 0; l < config_.layers; ++l) {
      t.layer_w.push_back(add_tensor(fmt::format("{}.round{}.weight", prefix, l), h, h));
      t.layer_b.push_back(add_tensor(fmt::format("{}.round{}.bias", prefix, l), 1, h));
    }
    return t;
  };
  pi_trunk_ = build_trunk("policy");
  pi_w_ = add_tensor("policy.head.weight", h, kNumKinds);
  pi_b_ = add_tensor("policy.head.bias", 1, kNumKinds);
  v_trunk_ = build_trunk("value");
  v_w_ = add_tensor("value.head.weight", h, 1);
  v_b_ = add_tensor("value.head.bias", 1, 1);
  params_ = Eigen::VectorXd::Zero(tensors_.back().offset + tensors_.back().rows * tensors_.back().cols);

  Rng rng(derive_seed(seed, 0x9011C7));
  for (const auto& t : tensors_) {
    if (t.rows == 1) continue;  // biases start at zero
    const double bound = std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
    const double gain = t.name == "policy.head.weight" ? 0.01 : 1.0;
    for (Eigen::Index i = 0; i < t.rows * t.cols; ++i) {
      params_[t.offset + i] = gain * bound * (2.0 * uniform01(rng) - 1.0);
    }
  }
}

PolicyInput GraphPolicy::prepare_raw(const Eigen::MatrixXd& x, const std::vector<ZoneEdge>& adjacency,
                                     std::vector<std::uint8_t> mask) const {
  const auto n = static_cast<int>(x.rows());
  if (x.cols() != kPolicyInputs) {
    throw ShapeError(fmt::format("policy input has {} features per zone, expected {}", x.cols(), kPolicyInputs));
  }
  if (mask.size() != static_cast<std::size_t>(n * kNumKinds)) {
    throw ShapeError(fmt::format("mask has {} entries, expected {}", mask.size(), n * kNumKinds));
  }
  PolicyInput in;
  in.zones = n;
  in.x = x;
  in.mask = std::move(mask);
  in.propagation = Eigen::MatrixXd::Identity(n, n);
  for (const auto& [a, b] : adjacency) {
    if (a < 0 || b < 0 || a >= n || b >= n) throw ShapeError(fmt::format("adjacency pair ({}, {}) out of range", a, b));
    in.propagation(a, b) = 1.0;
    in.propagation(b, a) = 1.0;
  }
  if (config_.aggregation == Aggregation::Mean) {
    for (int i = 0; i < n; ++i) in.propagation.row(i) /= in.propagation.row(i).sum();
  }
  return in;
}

PolicyInput GraphPolicy::prepare(const EnvState& state, int horizon_steps) const {
  const int n = state.num_zones;
  if (state.features.size() != static_cast<std::size_t>(n * kZoneFeatures)) {
    throw ShapeError(fmt::format("state has {} features for {} zones", state.features.size(), n));
  }
  Eigen::MatrixXd x(n, kPolicyInputs);
  const double progress = horizon_steps > 0 ? static_cast<double>(state.step) / horizon_steps : 0.0;
  for (int i = 0; i < n; ++i) {
    for (int f = 0; f < 3; ++f) {
      double v = 0.0;
      if (norm_.count > 0.0) {
        v = (state.feature(i, f) - norm_.mean[static_cast<std::size_t>(f)]) / norm_.stddev(f);
        v = std::clamp(v, -config_.feature_clip, config_.feature_clip);
      }
      x(i, f) = v;
    }
    for (int f = 3; f < kZoneFeatures; ++f) x(i, f) = state.feature(i, f);
    x(i, kZoneFeatures) = progress;
  }
  return prepare_raw(x, state.adjacency, state.mask);
}

Eigen::MatrixXd GraphPolicy::run_trunk(const Trunk& t, const PolicyInput& in, TrunkCache& cache) const {
  const Eigen::Index h = config_.hidden;
  cache.h.clear();
  Eigen::MatrixXd z = in.x * mat(t.enc_w, kPolicyInputs, h);
  z.rowwise() += mat(t.enc_b, 1, h).row(0);
  cache.h.push_back(z.array().tanh().matrix());
  for (int l = 0; l < config_.layers; ++l) {
    z = in.propagation * cache.h.back() * mat(t.layer_w[static_cast<std::size_t>(l)], h, h);
    z.rowwise() += mat(t.layer_b[static_cast<std::size_t>(l)], 1, h).row(0);
    cache.h.push_back(z.array().tanh().matrix());
  }
  return cache.h.back();
}

PolicyOutput GraphPolicy::forward(const PolicyInput& in) const {
  const Eigen::Index h = config_.hidden;
  PolicyOutput out;
  const Eigen::MatrixXd hp = run_trunk(pi_trunk_, in, out.policy_cache);
  out.logits = hp * mat(pi_w_, h, kNumKinds);
  out.logits.rowwise() += mat(pi_b_, 1, kNumKinds).row(0);

  out.probs = Eigen::MatrixXd::Zero(in.zones, kNumKinds);
  for (int i = 0; i < in.zones; ++i) {
    double hi = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < kNumKinds; ++k) {
      if (in.mask[static_cast<std::size_t>(i * kNumKinds + k)]) hi = std::max(hi, out.logits(i, k));
    }
    if (hi == -std::numeric_limits<double>::infinity()) throw ContractViolation(fmt::format("zone {}: every action is masked", i));
    double sum = 0.0;
    for (int k = 0; k < kNumKinds; ++k) {
      if (!in.mask[static_cast<std::size_t>(i * kNumKinds + k)]) continue;
      out.probs(i, k) = std::exp(out.logits(i, k) - hi);
      sum += out.probs(i, k);
    }
    out.probs.row(i) /= sum;
  }

  const Eigen::MatrixXd hv = run_trunk(v_trunk_, in, out.value_cache);
  const Eigen::RowVectorXd pooled = hv.colwise().mean();
  out.value = (pooled * mat(v_w_, h, 1))(0, 0) + params_[v_b_];
  return out;
}

ActResult GraphPolicy::act(const PolicyInput& in, Rng& rng, bool deterministic) const {
  const auto out = forward(in);
  ActResult r;
  r.value = out.value;
  for (int i = 0; i < in.zones; ++i) {
    int chosen = 0;
    if (deterministic) {
      for (int k = 1; k < kNumKinds; ++k) {
        if (out.probs(i, k) > out.probs(i, chosen)) chosen = k;
      }
    } else {
      double u = uniform01(rng);
      chosen = -1;
      for (int k = 0; k < kNumKinds; ++k) {
        if (out.probs(i, k) <= 0.0) continue;
        chosen = k;
        if (u < out.probs(i, k)) break;
        u -= out.probs(i, k);
      }
    }
    r.actions.push_back(kind_at(chosen));
    r.log_probs.push_back(std::log(out.probs(i, chosen)));
    r.joint_log_prob += r.log_probs.back();
  }
  return r;
}

void GraphPolicy::trunk_backward(const Trunk& t, const PolicyInput& in, const TrunkCache& cache, Eigen::MatrixXd dh,
                                 Eigen::Ref<Eigen::VectorXd> grad) const {
  const Eigen::Index h = config_.hidden;
  for (int l = config_.layers; l >= 1; --l) {
    const Eigen::MatrixXd& out = cache.h[static_cast<std::size_t>(l)];
    const Eigen::MatrixXd dz = dh.array() * (1.0 - out.array().square());
    const Eigen::MatrixXd agg = in.propagation * cache.h[static_cast<std::size_t>(l - 1)];
    const auto w_off = t.layer_w[static_cast<std::size_t>(l - 1)];
    const auto b_off = t.layer_b[static_cast<std::size_t>(l - 1)];
    Eigen::Map<Eigen::MatrixXd>(grad.data() + w_off, h, h) += agg.transpose() * dz;
    Eigen::Map<Eigen::MatrixXd>(grad.data() + b_off, 1, h) += dz.colwise().sum();
    dh = in.propagation.transpose() * dz * mat(w_off, h, h).transpose();
  }
  const Eigen::MatrixXd dz = dh.array() * (1.0 - cache.h[0].array().square());
  Eigen::Map<Eigen::MatrixXd>(grad.data() + t.enc_w, kPolicyInputs, h) += in.x.transpose() * dz;
  Eigen::Map<Eigen::MatrixXd>(grad.data() + t.enc_b, 1, h) += dz.colwise().sum();
}

void GraphPolicy::backward(const PolicyInput& in, const PolicyOutput& out, const Eigen::MatrixXd& dlogits,
                           double dvalue, Eigen::Ref<Eigen::VectorXd> grad) const {
  const Eigen::Index h = config_.hidden;
  if (grad.size() != params_.size()) throw ShapeError("gradient buffer does not match the parameter count");
  const Eigen::MatrixXd& hp = out.policy_cache.h.back();
  Eigen::Map<Eigen::MatrixXd>(grad.data() + pi_w_, h, kNumKinds) += hp.transpose() * dlogits;
  Eigen::Map<Eigen::MatrixXd>(grad.data() + pi_b_, 1, kNumKinds) += dlogits.colwise().sum();
  trunk_backward(pi_trunk_, in, out.policy_cache, dlogits * mat(pi_w_, h, kNumKinds).transpose(), grad);

  if (dvalue != 0.0) {
    const Eigen::MatrixXd& hv = out.value_cache.h.back();
    const Eigen::RowVectorXd pooled = hv.colwise().mean();
    Eigen::Map<Eigen::MatrixXd>(grad.data() + v_w_, h, 1) += dvalue * pooled.transpose();
    grad[v_b_] += dvalue;
    const Eigen::RowVectorXd w = mat(v_w_, h, 1).col(0).transpose();
    Eigen::MatrixXd dh = (dvalue / static_cast<double>(in.zones)) * Eigen::MatrixXd::Ones(in.zones, 1) * w;
    trunk_backward(v_trunk_, in, out.value_cache, std::move(dh), grad);
  }
}

double joint_log_prob(const PolicyOutput& out, std::span<const int> actions) {
  double lp = 0.0;
  for (std::size_t i = 0; i < actions.size(); ++i) lp += std::log(out.probs(static_cast<Eigen::Index>(i), actions[i]));
  return lp;
}

double entropy_sum(const PolicyOutput& out) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < out.probs.rows(); ++i) {
    for (Eigen::Index k = 0; k < out.probs.cols(); ++k) {
      const double p = out.probs(i, k);
      if (p > 0.0) h -= p * std::log(p);
    }
  }
  return h;
}

}  // namespace climadapt
