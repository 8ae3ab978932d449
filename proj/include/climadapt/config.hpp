#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "climadapt/city.hpp"
#include "climadapt/env.hpp"
#include "climadapt/policy.hpp"
#include "climadapt/ppo.hpp"

namespace climadapt {

struct EvalConfig {
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  bool deterministic = true;  // argmax actions; false samples from the policy
};

// Everything a command needs besides its flags. Relative paths resolve
// against the directory of the config file.
struct RunConfig {
  std::optional<std::filesystem::path> city_bundle;  // else generated from city + city_seed
  CitySpec city;
  std::uint64_t city_seed = 0;
  EnvConfig env;
  PolicyConfig policy;
  TrainConfig train;
  EvalConfig eval;
  double eur_per_dkk = 0.134;  // display only

  // Throws ConfigError naming the field.
  void validate() const;
};

// Unknown keys and wrongly typed values raise ConfigError with the dotted
// field path.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const PolicyConfig& c);
nlohmann::json to_json(const TrainConfig& c);
PolicyConfig parse_policy_config(const nlohmann::json& j, const std::string& where = "policy");
TrainConfig parse_train_config(const nlohmann::json& j, const std::string& where = "train");

// Bundle from disk or the synthetic generator.
CityBundle make_city(const RunConfig& config);

}  // namespace climadapt
