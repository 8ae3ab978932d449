#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "climadapt/env.hpp"

namespace climadapt {

enum class Aggregation { Mean, Sum };

struct PolicyConfig {
  int hidden = 64;
  int layers = 2;  // message-passing rounds
  Aggregation aggregation = Aggregation::Mean;
  double feature_clip = 10.0;  // standardized impact features are clipped to +-clip

  // Throws ConfigError naming the field.
  void validate() const;
};

// Per-zone input: standardized I, D, C, the seven effectiveness values and
// the episode progress t / T.
inline constexpr int kPolicyInputs = kZoneFeatures + 1;

// Running mean and variance of the three impact features (parallel Welford
// merge).
struct RunningNorm {
  double count = 0.0;
  std::array<double, 3> mean{};
  std::array<double, 3> m2{};

  void add(std::span<const double> impacts);  // one zone's I, D, C
  void merge(const RunningNorm& other);
  double stddev(int f) const;
};

// Graph-structured input prepared for one observation.
struct PolicyInput {
  int zones = 0;
  Eigen::MatrixXd x;               // zones x kPolicyInputs
  Eigen::MatrixXd propagation;     // zones x zones aggregation operator
  std::vector<std::uint8_t> mask;  // zones x kNumKinds
};

// Intermediate activations kept for backpropagation.
struct TrunkCache {
  std::vector<Eigen::MatrixXd> h;  // h[0] encoder output, h[l] after round l
};

struct PolicyOutput {
  Eigen::MatrixXd logits;  // zones x kNumKinds, before masking
  Eigen::MatrixXd probs;   // masked softmax; masked kinds exactly 0
  double value = 0.0;
  TrunkCache policy_cache;
  TrunkCache value_cache;
};

struct ActResult {
  std::vector<Kind> actions;
  std::vector<double> log_probs;  // per zone
  double joint_log_prob = 0.0;
  double value = 0.0;
};

// Message-passing actor and critic with separate trunks. Parameters are one
// flat vector; shapes depend only on the config, never on the zone count.
class GraphPolicy {
 public:
  GraphPolicy() : GraphPolicy(PolicyConfig{}, 0) {}
  // Xavier-uniform weights, zero biases, action head scaled by 0.01.
  GraphPolicy(PolicyConfig config, std::uint64_t seed);

  const PolicyConfig& config() const { return config_; }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::Index num_params() const { return params_.size(); }

  RunningNorm& norm() { return norm_; }
  const RunningNorm& norm() const { return norm_; }

  // Standardizes features with the current statistics. horizon_steps sets
  // the progress feature. Throws ShapeError on inconsistent state arrays.
  PolicyInput prepare(const EnvState& state, int horizon_steps) const;
  // Raw features straight from arrays (zones x kPolicyInputs).
  PolicyInput prepare_raw(const Eigen::MatrixXd& x, const std::vector<ZoneEdge>& adjacency,
                          std::vector<std::uint8_t> mask) const;

  PolicyOutput forward(const PolicyInput& in) const;

  // Samples each zone independently (argmax when deterministic).
  ActResult act(const PolicyInput& in, Rng& rng, bool deterministic) const;

  // Adds the parameter gradient for upstream gradients on the logits and on
  // the value to grad.
  void backward(const PolicyInput& in, const PolicyOutput& out, const Eigen::MatrixXd& dlogits, double dvalue,
                Eigen::Ref<Eigen::VectorXd> grad) const;

  // Named tensors with shapes, in parameter order.
  struct Tensor {
    std::string name;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    Eigen::Index offset = 0;
  };
  const std::vector<Tensor>& tensors() const { return tensors_; }

 private:
  struct Trunk {
    Eigen::Index enc_w, enc_b;
    std::vector<Eigen::Index> layer_w, layer_b;
  };

  Eigen::MatrixXd run_trunk(const Trunk& t, const PolicyInput& in, TrunkCache& cache) const;
  void trunk_backward(const Trunk& t, const PolicyInput& in, const TrunkCache& cache, Eigen::MatrixXd dh,
                      Eigen::Ref<Eigen::VectorXd> grad) const;
  Eigen::Index add_tensor(const std::string& name, Eigen::Index rows, Eigen::Index cols);
  Eigen::Map<const Eigen::MatrixXd> mat(Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) const;

  PolicyConfig config_;
  Eigen::VectorXd params_;
  RunningNorm norm_;
  std::vector<Tensor> tensors_;
  Trunk pi_trunk_, v_trunk_;
  Eigen::Index pi_w_ = 0, pi_b_ = 0, v_w_ = 0, v_b_ = 0;
};

// log pi(a | s) per zone and joint, for given actions under out.probs.
double joint_log_prob(const PolicyOutput& out, std::span<const int> actions);
// Sum over zones of the entropy of the masked distribution.
double entropy_sum(const PolicyOutput& out);

}  // namespace climadapt
