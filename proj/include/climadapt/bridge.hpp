#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "climadapt/env.hpp"

namespace climadapt {

// Bumped whenever an array layout below changes.
inline constexpr int kBridgeProtocolVersion = 1;

// Observation as flat arrays, all row-major:
//   node_features  num_zones x feature_dim (I, D, C, then seven effectiveness values)
//   edge_index     num_edges x 2 undirected zone pairs (a < b)
//   action_mask    num_zones x kNumKinds, 1 = allowed
struct BridgeObservation {
  int step = 0;
  int num_zones = 0;
  int feature_dim = kZoneFeatures;
  std::vector<double> node_features;
  std::vector<std::int64_t> edge_index;
  std::vector<std::uint8_t> action_mask;
};

inline constexpr int kBridgeCostColumns = 5;  // I, D, C, A, M

struct BridgeStep {
  BridgeObservation observation;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;  // the horizon is part of the task, so always false
  int year = 0;
  double rainfall_mm = 0.0;
  std::vector<double> costs;  // num_zones x kBridgeCostColumns
};

BridgeObservation to_bridge(const EnvState& state);

// One environment instance for a foreign runtime. Holds no logic of its own.
class EnvHandle {
 public:
  explicit EnvHandle(std::shared_ptr<const CityModel> model);
  // Loads a city bundle directory; config_path may be empty for defaults.
  EnvHandle(const std::filesystem::path& bundle_dir, const std::filesystem::path& config_path);

  // Throws ConfigError listing the valid ids for an unknown scenario.
  BridgeObservation reset(std::string_view scenario, std::uint64_t seed);
  // One kind index per zone. Throws ContractViolation for a wrong length,
  // an out-of-range index or a masked kind, before any state change.
  BridgeStep step(std::span<const std::int64_t> actions);

  int num_zones() const { return env_.num_zones(); }
  int protocol_version() const { return kBridgeProtocolVersion; }
  const Environment& environment() const { return env_; }

 private:
  Environment env_;
};

}  // namespace climadapt
