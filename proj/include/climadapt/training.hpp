#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "climadapt/policy.hpp"
#include "climadapt/ppo.hpp"

namespace climadapt {

inline constexpr int kCheckpointVersion = 1;

// Moving-average plateau detector over finished-episode returns.
struct EarlyStop {
  std::deque<double> recent;  // last 10 episode returns, DKK
  bool has_best = false;
  double best = 0.0;
  int updates_since_best = 0;

  static constexpr std::size_t kWindow = 10;

  void add_episode(double total_reward);
  bool ready() const { return recent.size() >= kWindow; }
  double moving_average() const;
  // Called once per update; true when the patience is exhausted.
  bool end_of_update(int patience, double min_improvement);
};

struct TrainingProgress {
  long long env_steps = 0;
  int updates = 0;
  long long episodes = 0;
  EarlyStop early_stop;
  bool plateaued = false;
};

struct Checkpoint {
  int version = kCheckpointVersion;
  Scenario scenario = Scenario::Rcp45;
  PolicyConfig policy_config;
  TrainConfig train_config;
  Eigen::VectorXd params;
  RunningNorm norm;
  AdamState adam;
  TrainingProgress progress;
};

nlohmann::json to_json(const Checkpoint& c);
// Throws DataError on a malformed or incompatible checkpoint.
Checkpoint checkpoint_from_json(const nlohmann::json& j, const std::string& source);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::shared_ptr<GraphPolicy> policy_from_checkpoint(const Checkpoint& c);

struct TrainingLogRow {
  int update = 0;
  long long env_steps = 0;
  long long episodes = 0;
  double mean_return = 0.0;  // 10-episode moving average, DKK; NaN before the first 10
  LossTerms loss;            // first minibatch of the update
  double approx_kl = 0.0;    // mean over minibatches that stepped
  double clip_fraction = 0.0;
  int minibatches_run = 0;
  bool kl_stopped = false;
  double seconds = 0.0;
};

std::string training_log_header();
std::string format_log_row(const TrainingLogRow& r);

struct TrainingResult {
  std::vector<TrainingLogRow> log;
  std::vector<std::filesystem::path> checkpoints;
  bool early_stopped = false;
  Checkpoint final_state;
};

// PPO loop: collect, update, merge normalizer statistics, log, checkpoint.
class Trainer {
 public:
  Trainer(std::shared_ptr<const CityModel> model, Scenario scenario, PolicyConfig policy, TrainConfig train);
  // Continues from a checkpoint; new episodes start at the resumed update.
  Trainer(std::shared_ptr<const CityModel> model, const Checkpoint& from);

  // One collection plus update.
  TrainingLogRow step();
  // Runs until the next update would exceed max_env_steps (at least one
  // update per call) or the return plateaus. When out_dir is non-empty,
  // writes train_log.csv and checkpoints under it. on_row is called after
  // every update.
  TrainingResult run(const std::filesystem::path& out_dir,
                     const std::function<void(const TrainingLogRow&)>& on_row = {});

  Checkpoint snapshot() const;
  const GraphPolicy& policy() const { return *policy_; }
  const TrainingProgress& progress() const { return progress_; }

 private:
  void make_collector();

  std::shared_ptr<const CityModel> model_;
  Scenario scenario_;
  TrainConfig train_;
  std::shared_ptr<GraphPolicy> policy_;
  AdamState adam_;
  TrainingProgress progress_;
  std::unique_ptr<RolloutCollector> collector_;
};

}  // namespace climadapt
