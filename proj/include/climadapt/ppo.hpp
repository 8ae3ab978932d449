#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "climadapt/env.hpp"
#include "climadapt/policy.hpp"

namespace climadapt {

struct TrainConfig {
  int batch_size = 64;                  // minibatch size
  int rollout_steps_per_update = 1024;  // per environment
  int epochs_per_update = 10;
  double entropy_coefficient = 0.01;
  double value_coefficient = 0.5;
  double kl_limit = 0.2;
  double clip_range = 0.2;
  double learning_rate = 3e-4;
  double max_grad_norm = 0.5;
  int parallel_envs = 10;
  int worker_threads = 1;  // rollout threads; results do not depend on it
  long long max_env_steps = 4'500'000;
  int early_stop_patience = 50;          // updates without improvement
  double early_stop_min_improvement = 0.005;  // relative, on the 10-episode moving average
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double reward_scale = 1e6;  // DKK per training reward unit
  bool normalize_advantages = true;
  std::uint64_t seed = 0;
  int checkpoint_every = 10;  // updates; the final update is always saved

  // Throws ConfigError naming the field.
  void validate() const;
};

// One decision of one environment. The input is prepared with the
// normalizer frozen for the whole update.
struct Transition {
  PolicyInput input;
  std::vector<int> actions;  // kind index per zone
  double log_prob = 0.0;     // joint, under the collecting parameters
  double value = 0.0;
  double reward = 0.0;  // scaled
  bool done = false;
  double advantage = 0.0;
  double ret = 0.0;  // advantage + value
};

// GAE over one environment's consecutive transitions. last_value
// bootstraps the state after the final transition unless it is done.
std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values,
                                std::span<const std::uint8_t> dones, double last_value, double gamma, double lambda);

struct EpisodeRecord {
  double total_reward_dkk = 0.0;
  int length = 0;
};

struct RolloutBatch {
  std::vector<Transition> transitions;  // env-major: env 0's steps, then env 1's, ...
  std::vector<EpisodeRecord> finished;  // episodes that ended during collection, grouped by environment
  RunningNorm observed;                 // raw impact statistics of the states seen
};

// N environments stepped in lockstep for n_steps each. Episodes continue
// across calls; each episode is reset with derive_seed(seed, env, episode).
class RolloutCollector {
 public:
  RolloutCollector(std::shared_ptr<const CityModel> model, Scenario scenario, int num_envs, std::uint64_t seed);

  RolloutBatch collect(const GraphPolicy& policy, int n_steps, double gamma, double lambda, double reward_scale,
                       int threads = 1);

  int num_envs() const { return static_cast<int>(workers_.size()); }
  long long env_steps() const { return env_steps_; }

 private:
  struct Worker {
    Environment env;
    Rng rng;
    std::uint64_t episodes = 0;
    double episode_reward = 0.0;
    int episode_length = 0;
  };
  void run_worker(std::size_t w, const GraphPolicy& policy, int n_steps, double gamma, double lambda,
                  double reward_scale, std::vector<Transition>& out, std::vector<EpisodeRecord>& finished,
                  RunningNorm& observed);

  std::shared_ptr<const CityModel> model_;
  Scenario scenario_;
  std::uint64_t seed_;
  std::vector<Worker> workers_;
  long long env_steps_ = 0;
};

// Normalizes advantages to mean 0, std 1 across the batch (no-op for one
// transition) and recomputes nothing else.
void normalize_advantages(std::vector<Transition>& batch);

struct LossTerms {
  double policy_loss = 0.0;   // -mean(min(rA, clip(r)A))
  double value_loss = 0.0;    // mean((V - R)^2)
  double entropy = 0.0;       // mean over transitions of the per-zone entropy sum
  double total = 0.0;         // policy + vf * value - ent * entropy
  double approx_kl = 0.0;     // mean((r - 1) - log r)
  double clip_fraction = 0.0;
};

struct LossCoefficients {
  double clip_range = 0.2;
  double value = 0.5;
  double entropy = 0.01;
};

// Clipped-surrogate loss on a minibatch; when grad is non-null, adds the
// gradient of total with respect to the parameters.
LossTerms ppo_loss(const GraphPolicy& policy, std::span<const Transition* const> batch, const LossCoefficients& c,
                   Eigen::VectorXd* grad);

// -mean(A grad log pi(a|s)), the plain score-function estimator.
Eigen::VectorXd vanilla_policy_gradient(const GraphPolicy& policy, std::span<const Transition* const> batch);

struct AdamState {
  Eigen::VectorXd m, v;
  long long t = 0;
};

// One Adam step (beta 0.9/0.999, eps 1e-5) on params in place.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state, double lr);

// Rescales grad to at most max_norm; returns the norm before clipping.
double clip_grad_norm(Eigen::VectorXd& grad, double max_norm);

struct UpdateDiagnostics {
  LossTerms first;  // on the first minibatch, before any step
  LossTerms last;   // on the last minibatch that stepped
  double mean_approx_kl = 0.0;
  double mean_clip_fraction = 0.0;
  int minibatches_run = 0;
  int minibatches_planned = 0;
  bool kl_stopped = false;
  double grad_norm = 0.0;  // before clipping, last step
};

// Raised when the loss or its gradient stops being finite; carries the
// parameters at the failing minibatch.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, Eigen::VectorXd snapshot)
      : std::runtime_error(what), snapshot_(std::move(snapshot)) {}
  const Eigen::VectorXd& snapshot() const { return snapshot_; }

 private:
  Eigen::VectorXd snapshot_;
};

// Epochs of shuffled minibatch Adam steps. Before each step the minibatch
// approx-KL is checked; once it exceeds kl_limit no further minibatch runs.
UpdateDiagnostics ppo_update(GraphPolicy& policy, AdamState& adam, std::vector<Transition>& batch,
                             const TrainConfig& config, Rng& rng);

}  // namespace climadapt
