#include "climadapt/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include <fmt/format.h>

namespace climadapt {

void TrainConfig::validate() const {
  auto positive = [](double v, const char* field) {
    if (!(v > 0.0)) throw ConfigError(fmt::format("train.{}: must be positive", field));
  };
  positive(batch_size, "batch_size");
  positive(rollout_steps_per_update, "rollout_steps_per_update");
  positive(epochs_per_update, "epochs_per_update");
  positive(kl_limit, "kl_limit");
  positive(clip_range, "clip_range");
  positive(learning_rate, "learning_rate");
  positive(max_grad_norm, "max_grad_norm");
  positive(parallel_envs, "parallel_envs");
  positive(worker_threads, "worker_threads");
  positive(static_cast<double>(max_env_steps), "max_env_steps");
  positive(early_stop_patience, "early_stop_patience");
  positive(gamma, "gamma");
  positive(gae_lambda, "gae_lambda");
  positive(reward_scale, "reward_scale");
  positive(checkpoint_every, "checkpoint_every");
  if (entropy_coefficient < 0.0) throw ConfigError("train.entropy_coefficient: must be >= 0");
  if (value_coefficient < 0.0) throw ConfigError("train.value_coefficient: must be >= 0");
  if (early_stop_min_improvement < 0.0) throw ConfigError("train.early_stop_min_improvement: must be >= 0");
  if (gamma > 1.0) throw ConfigError("train.gamma: must be <= 1");
  if (gae_lambda > 1.0) throw ConfigError("train.gae_lambda: must be <= 1");
  if (rollout_steps_per_update % batch_size != 0) {
    throw ConfigError(fmt::format("train.rollout_steps_per_update: {} is not divisible by batch_size {}",
                                  rollout_steps_per_update, batch_size));
  }
}

std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values,
                                std::span<const std::uint8_t> dones, double last_value, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw ShapeError("GAE inputs differ in length");
  std::vector<double> adv(n, 0.0);
  double running = 0.0;
  double next_value = last_value;
  for (std::size_t i = n; i-- > 0;) {
    const double live = dones[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * next_value * live - values[i];
    running = delta + gamma * lambda * live * running;
    adv[i] = running;
    next_value = values[i];
  }
  return adv;
}

RolloutCollector::RolloutCollector(std::shared_ptr<const CityModel> model, Scenario scenario, int num_envs,
                                   std::uint64_t seed)
    : model_(std::move(model)), scenario_(scenario), seed_(seed) {
  if (num_envs < 1) throw ConfigError("train.parallel_envs: must be positive");
  for (int w = 0; w < num_envs; ++w) {
    workers_.push_back(Worker{Environment(model_), Rng(derive_seed(seed_, 0xAC7, static_cast<std::uint64_t>(w)))});
    workers_.back().env.reset(scenario_, derive_seed(seed_, static_cast<std::uint64_t>(w), 0));
    workers_.back().episodes = 1;
  }
}

void RolloutCollector::run_worker(std::size_t w, const GraphPolicy& policy, int n_steps, double gamma, double lambda,
                                  double reward_scale, std::vector<Transition>& out,
                                  std::vector<EpisodeRecord>& finished, RunningNorm& observed) {
  Worker& wk = workers_[w];
  const int horizon = model_->horizon_steps();
  out.clear();
  out.reserve(static_cast<std::size_t>(n_steps));
  for (int s = 0; s < n_steps; ++s) {
    const EnvState& state = wk.env.state();
    for (int z = 0; z < state.num_zones; ++z) {
      observed.add(std::span<const double>(state.features.data() + z * kZoneFeatures, 3));
    }
    Transition t;
    t.input = policy.prepare(state, horizon);
    const auto act = policy.act(t.input, wk.rng, false);
    t.log_prob = act.joint_log_prob;
    t.value = act.value;
    for (Kind k : act.actions) t.actions.push_back(index_of(k));
    const auto r = wk.env.step(act.actions);
    t.reward = r.reward / reward_scale;
    t.done = r.done;
    wk.episode_reward += r.reward;
    ++wk.episode_length;
    if (r.done) {
      finished.push_back({wk.episode_reward, wk.episode_length});
      wk.episode_reward = 0.0;
      wk.episode_length = 0;
      wk.env.reset(scenario_, derive_seed(seed_, w, wk.episodes++));
    }
    out.push_back(std::move(t));
  }
  const double last_value = policy.forward(policy.prepare(wk.env.state(), horizon)).value;
  std::vector<double> rewards, values;
  std::vector<std::uint8_t> dones;
  for (const auto& t : out) {
    rewards.push_back(t.reward);
    values.push_back(t.value);
    dones.push_back(t.done ? 1 : 0);
  }
  const auto adv = compute_gae(rewards, values, dones, last_value, gamma, lambda);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].advantage = adv[i];
    out[i].ret = adv[i] + out[i].value;
  }
}

RolloutBatch RolloutCollector::collect(const GraphPolicy& policy, int n_steps, double gamma, double lambda,
                                       double reward_scale, int threads) {
  const std::size_t n = workers_.size();
  std::vector<std::vector<Transition>> parts(n);
  std::vector<std::vector<EpisodeRecord>> done(n);
  std::vector<RunningNorm> norms(n);
  auto run_range = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t w = begin; w < n; w += stride) {
      run_worker(w, policy, n_steps, gamma, lambda, reward_scale, parts[w], done[w], norms[w]);
    }
  };
  const auto pool = static_cast<std::size_t>(std::clamp(threads, 1, static_cast<int>(n)));
  if (pool == 1) {
    run_range(0, 1);
  } else {
    std::vector<std::thread> ts;
    std::vector<std::exception_ptr> errors(pool);
    for (std::size_t i = 0; i < pool; ++i) {
      ts.emplace_back([&, i] {
        try {
          run_range(i, pool);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
    for (auto& t : ts) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  RolloutBatch batch;
  for (std::size_t w = 0; w < n; ++w) {
    std::move(parts[w].begin(), parts[w].end(), std::back_inserter(batch.transitions));
    batch.finished.insert(batch.finished.end(), done[w].begin(), done[w].end());
    batch.observed.merge(norms[w]);
  }
  env_steps_ += static_cast<long long>(n) * n_steps;
  return batch;
}

void normalize_advantages(std::vector<Transition>& batch) {
  if (batch.size() < 2) return;
  double mean = 0.0;
  for (const auto& t : batch) mean += t.advantage;
  mean /= static_cast<double>(batch.size());
  double var = 0.0;
  for (const auto& t : batch) var += (t.advantage - mean) * (t.advantage - mean);
  const double sd = std::sqrt(var / static_cast<double>(batch.size())) + 1e-8;
  for (auto& t : batch) t.advantage = (t.advantage - mean) / sd;
}

namespace {

// d(log pi(a_i))/d logits_i = onehot(a_i) - pi_i, zero on masked kinds.
void add_score(const PolicyOutput& out, const std::vector<int>& actions, double scale, Eigen::MatrixXd& dlogits) {
  for (Eigen::Index i = 0; i < out.probs.rows(); ++i) {
    for (int k = 0; k < kNumKinds; ++k) {
      const double onehot = actions[static_cast<std::size_t>(i)] == k ? 1.0 : 0.0;
      dlogits(i, k) += scale * (onehot - out.probs(i, k));
    }
  }
}

}  // namespace

LossTerms ppo_loss(const GraphPolicy& policy, std::span<const Transition* const> batch, const LossCoefficients& c,
                   Eigen::VectorXd* grad) {
  LossTerms terms;
  if (batch.empty()) throw ContractViolation("PPO loss needs a nonempty batch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const Transition* t : batch) {
    const auto out = policy.forward(t->input);
    const double logp = joint_log_prob(out, t->actions);
    const double ratio = std::exp(logp - t->log_prob);
    const double clipped = std::clamp(ratio, 1.0 - c.clip_range, 1.0 + c.clip_range);
    const double a = t->advantage;
    const bool unclipped_wins = ratio * a <= clipped * a;
    terms.policy_loss -= inv_b * (unclipped_wins ? ratio * a : clipped * a);
    terms.value_loss += inv_b * (out.value - t->ret) * (out.value - t->ret);
    const double h = entropy_sum(out);
    terms.entropy += inv_b * h;
    terms.approx_kl += inv_b * ((ratio - 1.0) - (logp - t->log_prob));
    if (std::abs(ratio - 1.0) > c.clip_range) terms.clip_fraction += inv_b;

    if (grad == nullptr) continue;
    Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(out.probs.rows(), kNumKinds);
    if (unclipped_wins) add_score(out, t->actions, -inv_b * ratio * a, dlogits);
    if (c.entropy != 0.0) {
      // dH_i/dlogit_k = -pi_k (log pi_k + H_i); loss carries -c.entropy.
      for (Eigen::Index i = 0; i < out.probs.rows(); ++i) {
        double hi = 0.0;
        for (int k = 0; k < kNumKinds; ++k) {
          const double p = out.probs(i, k);
          if (p > 0.0) hi -= p * std::log(p);
        }
        for (int k = 0; k < kNumKinds; ++k) {
          const double p = out.probs(i, k);
          if (p > 0.0) dlogits(i, k) += c.entropy * inv_b * p * (std::log(p) + hi);
        }
      }
    }
    const double dvalue = c.value * 2.0 * (out.value - t->ret) * inv_b;
    policy.backward(t->input, out, dlogits, dvalue, *grad);
  }
  terms.total = terms.policy_loss + c.value * terms.value_loss - c.entropy * terms.entropy;
  return terms;
}

Eigen::VectorXd vanilla_policy_gradient(const GraphPolicy& policy, std::span<const Transition* const> batch) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(policy.num_params());
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const Transition* t : batch) {
    const auto out = policy.forward(t->input);
    Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(out.probs.rows(), kNumKinds);
    add_score(out, t->actions, -inv_b * t->advantage, dlogits);
    policy.backward(t->input, out, dlogits, 0.0, grad);
  }
  return grad;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state, double lr) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-5;
  if (state.m.size() != params.size()) {
    state.m = Eigen::VectorXd::Zero(params.size());
    state.v = Eigen::VectorXd::Zero(params.size());
    state.t = 0;
  }
  ++state.t;
  state.m = b1 * state.m + (1.0 - b1) * grad;
  state.v = b2 * state.v + (1.0 - b2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + eps);
}

double clip_grad_norm(Eigen::VectorXd& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm) grad *= max_norm / norm;
  return norm;
}

UpdateDiagnostics ppo_update(GraphPolicy& policy, AdamState& adam, std::vector<Transition>& batch,
                             const TrainConfig& config, Rng& rng) {
  if (batch.empty()) throw ContractViolation("PPO update needs a nonempty batch");
  if (config.normalize_advantages) normalize_advantages(batch);
  const LossCoefficients coef{config.clip_range, config.value_coefficient, config.entropy_coefficient};
  const std::size_t mb = std::min(batch.size(), static_cast<std::size_t>(config.batch_size));
  const std::size_t per_epoch = (batch.size() + mb - 1) / mb;

  UpdateDiagnostics diag;
  diag.minibatches_planned = static_cast<int>(per_epoch) * config.epochs_per_update;
  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<const Transition*> ptrs;
  Eigen::VectorXd grad(policy.num_params());
  for (int epoch = 0; epoch < config.epochs_per_update && !diag.kl_stopped; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    for (std::size_t start = 0; start < order.size(); start += mb) {
      ptrs.clear();
      for (std::size_t j = start; j < std::min(order.size(), start + mb); ++j) ptrs.push_back(&batch[order[j]]);
      grad.setZero();
      const auto terms = ppo_loss(policy, ptrs, coef, &grad);
      if (!std::isfinite(terms.total) || !grad.allFinite()) {
        throw TrainingDiverged(fmt::format("non-finite loss at epoch {} minibatch {} (policy {}, value {}, entropy {})",
                                           epoch, start / mb, terms.policy_loss, terms.value_loss, terms.entropy),
                               policy.params());
      }
      if (diag.minibatches_run == 0) diag.first = terms;
      if (terms.approx_kl > config.kl_limit) {
        diag.kl_stopped = true;
        break;
      }
      diag.grad_norm = clip_grad_norm(grad, config.max_grad_norm);
      adam_step(policy.params(), grad, adam, config.learning_rate);
      diag.last = terms;
      diag.mean_approx_kl += terms.approx_kl;
      diag.mean_clip_fraction += terms.clip_fraction;
      ++diag.minibatches_run;
    }
  }
  if (diag.minibatches_run > 0) {
    diag.mean_approx_kl /= diag.minibatches_run;
    diag.mean_clip_fraction /= diag.minibatches_run;
  }
  return diag;
}

}  // namespace climadapt
