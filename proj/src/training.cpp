#include "climadapt/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "climadapt/config.hpp"
#include "climadapt/text_io.hpp"

namespace climadapt {

using nlohmann::json;

void EarlyStop::add_episode(double total_reward) {
  recent.push_back(total_reward);
  while (recent.size() > kWindow) recent.pop_front();
}

double EarlyStop::moving_average() const {
  if (recent.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double v : recent) s += v;
  return s / static_cast<double>(recent.size());
}

bool EarlyStop::end_of_update(int patience, double min_improvement) {
  if (!ready()) return false;
  const double ma = moving_average();
  if (!has_best || ma > best + min_improvement * std::abs(best)) {
    best = ma;
    has_best = true;
    updates_since_best = 0;
    return false;
  }
  return ++updates_since_best >= patience;
}

namespace {

json vector_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vector_from(const json& j, const std::string& what, const std::string& source) {
  if (!j.is_array()) throw DataError(fmt::format("{}: {} must be an array of numbers", source, what));
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw DataError(fmt::format("{}: {}[{}] is not a number", source, what, i));
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

}  // namespace

nlohmann::json to_json(const Checkpoint& c) {
  json tensors = json::array();
  const auto policy = policy_from_checkpoint(c);
  for (const auto& t : policy->tensors()) tensors.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
  const auto& es = c.progress.early_stop;
  return json{
      {"format", "climadapt-checkpoint"},
      {"version", c.version},
      {"scenario", std::string(name_of(c.scenario))},
      {"policy", to_json(c.policy_config)},
      {"train", to_json(c.train_config)},
      {"tensors", tensors},
      {"params", vector_json(c.params)},
      {"norm", {{"count", c.norm.count}, {"mean", c.norm.mean}, {"m2", c.norm.m2}}},
      {"adam", {{"t", c.adam.t}, {"m", vector_json(c.adam.m)}, {"v", vector_json(c.adam.v)}}},
      {"progress",
       {{"env_steps", c.progress.env_steps},
        {"updates", c.progress.updates},
        {"episodes", c.progress.episodes},
        {"plateaued", c.progress.plateaued},
        {"recent_returns", std::vector<double>(es.recent.begin(), es.recent.end())},
        {"has_best", es.has_best},
        {"best", es.best},
        {"updates_since_best", es.updates_since_best}}}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j, const std::string& source) {
  Checkpoint c;
  try {
    if (j.value("format", "") != "climadapt-checkpoint") throw DataError(fmt::format("{}: not a checkpoint", source));
    c.version = j.at("version").get<int>();
    if (c.version != kCheckpointVersion) {
      throw DataError(fmt::format("{}: checkpoint version {} is not supported (expected {})", source, c.version,
                                  kCheckpointVersion));
    }
    c.scenario = require_scenario(j.at("scenario").get<std::string>());
    c.policy_config = parse_policy_config(j.at("policy"), "policy");
    c.train_config = parse_train_config(j.at("train"), "train");
    c.params = vector_from(j.at("params"), "params", source);
    const auto& n = j.at("norm");
    c.norm.count = n.at("count").get<double>();
    c.norm.mean = n.at("mean").get<std::array<double, 3>>();
    c.norm.m2 = n.at("m2").get<std::array<double, 3>>();
    const auto& a = j.at("adam");
    c.adam.t = a.at("t").get<long long>();
    c.adam.m = vector_from(a.at("m"), "adam.m", source);
    c.adam.v = vector_from(a.at("v"), "adam.v", source);
    const auto& p = j.at("progress");
    c.progress.env_steps = p.at("env_steps").get<long long>();
    c.progress.updates = p.at("updates").get<int>();
    c.progress.episodes = p.at("episodes").get<long long>();
    c.progress.plateaued = p.at("plateaued").get<bool>();
    for (double r : p.at("recent_returns").get<std::vector<double>>()) c.progress.early_stop.recent.push_back(r);
    c.progress.early_stop.has_best = p.at("has_best").get<bool>();
    c.progress.early_stop.best = p.at("best").get<double>();
    c.progress.early_stop.updates_since_best = p.at("updates_since_best").get<int>();
  } catch (const json::exception& e) {
    throw DataError(fmt::format("{}: malformed checkpoint ({})", source, e.what()));
  } catch (const ConfigError& e) {
    throw DataError(fmt::format("{}: {}", source, e.what()));
  }
  const GraphPolicy shape(c.policy_config, 0);
  if (c.params.size() != shape.num_params()) {
    throw DataError(fmt::format("{}: {} parameters, the policy config needs {}", source, c.params.size(),
                                shape.num_params()));
  }
  if (c.adam.t > 0 && (c.adam.m.size() != c.params.size() || c.adam.v.size() != c.params.size())) {
    throw DataError(fmt::format("{}: optimizer state does not match the parameters", source));
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  write_text_file(path, to_json(c).dump(1) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("{}: invalid JSON ({})", path.string(), e.what()));
  }
  return checkpoint_from_json(j, path.string());
}

std::shared_ptr<GraphPolicy> policy_from_checkpoint(const Checkpoint& c) {
  auto p = std::make_shared<GraphPolicy>(c.policy_config, 0);
  if (c.params.size() != p->num_params()) throw DataError("checkpoint parameters do not match the policy config");
  p->params() = c.params;
  p->norm() = c.norm;
  return p;
}

std::string training_log_header() {
  return "update,env_steps,episodes,mean_return_dkk,loss,policy_loss,value_loss,entropy,approx_kl,clip_fraction,"
         "minibatches_run,kl_stopped,seconds\n";
}

std::string format_log_row(const TrainingLogRow& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{:.3f}\n", r.update, r.env_steps, r.episodes,
                     std::isnan(r.mean_return) ? std::string() : format_number(r.mean_return),
                     format_number(r.loss.total), format_number(r.loss.policy_loss), format_number(r.loss.value_loss),
                     format_number(r.loss.entropy), format_number(r.approx_kl), format_number(r.clip_fraction),
                     r.minibatches_run, r.kl_stopped ? 1 : 0, r.seconds);
}

Trainer::Trainer(std::shared_ptr<const CityModel> model, Scenario scenario, PolicyConfig policy, TrainConfig train)
    : model_(std::move(model)), scenario_(scenario), train_(train) {
  train_.validate();
  policy_ = std::make_shared<GraphPolicy>(policy, derive_seed(train_.seed, 0x90));
  make_collector();
}

Trainer::Trainer(std::shared_ptr<const CityModel> model, const Checkpoint& from)
    : model_(std::move(model)), scenario_(from.scenario), train_(from.train_config), adam_(from.adam),
      progress_(from.progress) {
  train_.validate();
  policy_ = policy_from_checkpoint(from);
  make_collector();
}

void Trainer::make_collector() {
  const auto seed = derive_seed(train_.seed, 0x7A1, static_cast<std::uint64_t>(progress_.updates));
  collector_ = std::make_unique<RolloutCollector>(model_, scenario_, train_.parallel_envs, seed);
}

TrainingLogRow Trainer::step() {
  const auto t0 = std::chrono::steady_clock::now();
  auto batch = collector_->collect(*policy_, train_.rollout_steps_per_update, train_.gamma, train_.gae_lambda,
                                   train_.reward_scale, train_.worker_threads);
  for (const auto& e : batch.finished) {
    progress_.early_stop.add_episode(e.total_reward_dkk);
    ++progress_.episodes;
  }
  Rng rng(derive_seed(train_.seed, 0x5AFE, static_cast<std::uint64_t>(progress_.updates)));
  const auto diag = ppo_update(*policy_, adam_, batch.transitions, train_, rng);
  policy_->norm().merge(batch.observed);
  progress_.env_steps += static_cast<long long>(train_.parallel_envs) * train_.rollout_steps_per_update;
  ++progress_.updates;
  if (progress_.early_stop.end_of_update(train_.early_stop_patience, train_.early_stop_min_improvement)) {
    progress_.plateaued = true;
  }

  TrainingLogRow row;
  row.update = progress_.updates;
  row.env_steps = progress_.env_steps;
  row.episodes = progress_.episodes;
  row.mean_return = progress_.early_stop.ready() ? progress_.early_stop.moving_average()
                                                 : std::numeric_limits<double>::quiet_NaN();
  row.loss = diag.first;
  row.approx_kl = diag.mean_approx_kl;
  row.clip_fraction = diag.mean_clip_fraction;
  row.minibatches_run = diag.minibatches_run;
  row.kl_stopped = diag.kl_stopped;
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

Checkpoint Trainer::snapshot() const {
  Checkpoint c;
  c.scenario = scenario_;
  c.policy_config = policy_->config();
  c.train_config = train_;
  c.params = policy_->params();
  c.norm = policy_->norm();
  c.adam = adam_;
  c.progress = progress_;
  return c;
}

TrainingResult Trainer::run(const std::filesystem::path& out_dir,
                            const std::function<void(const TrainingLogRow&)>& on_row) {
  TrainingResult result;
  const bool write = !out_dir.empty();
  const auto log_path = out_dir / "train_log.csv";
  std::string log_text;
  if (write) {
    const bool resume = progress_.updates > 0 && std::filesystem::exists(log_path);
    log_text = resume ? read_text_file(log_path) : training_log_header();
  }
  auto save = [&] {
    const auto path = out_dir / "checkpoints" / fmt::format("update_{:06}.json", progress_.updates);
    const auto snap = snapshot();
    save_checkpoint(path, snap);
    save_checkpoint(out_dir / "checkpoint.json", snap);
    result.checkpoints.push_back(path);
  };
  // The first update of a run always happens; later ones only while they
  // fit the step budget.
  const long long per_update = static_cast<long long>(train_.parallel_envs) * train_.rollout_steps_per_update;
  auto fits = [&](bool first) {
    if (progress_.plateaued || progress_.env_steps >= train_.max_env_steps) return false;
    return first || progress_.env_steps + per_update <= train_.max_env_steps;
  };
  for (bool first = true; fits(first); first = false) {
    const auto row = step();
    result.log.push_back(row);
    if (on_row) on_row(row);
    if (write) {
      log_text += format_log_row(row);
      write_text_file(log_path, log_text);
      const bool last = !fits(false);
      if (last || progress_.updates % train_.checkpoint_every == 0) save();
    }
  }
  result.early_stopped = progress_.plateaued;
  result.final_state = snapshot();
  return result;
}

}  // namespace climadapt
