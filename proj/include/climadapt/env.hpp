#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "climadapt/city.hpp"
#include "climadapt/flood.hpp"
#include "climadapt/forcing.hpp"
#include "climadapt/interventions.hpp"
#include "climadapt/network.hpp"
#include "climadapt/valuation.hpp"

namespace climadapt {

struct EnvConfig {
  Horizon horizon;
  ForcingOptions forcing;
  std::array<ScenarioStats, kNumScenarios> scenarios = {default_scenario_stats(Scenario::Rcp26),
                                                        default_scenario_stats(Scenario::Rcp45),
                                                        default_scenario_stats(Scenario::Rcp85)};
  BoundaryMode boundary = BoundaryMode::Open;
  ElementDepthMode element_depth = ElementDepthMode::Max;
  DisruptionParams disruption;
  ValuationParams valuation;
  InterventionCatalog catalog;
  DecayConfig decay;
  // Draw a fresh trip table from the demand stream at every reset instead
  // of using the bundle's table.
  bool resample_trips_on_reset = false;

  // Throws ConfigError naming the field.
  void validate() const;
};

// Per-zone observation features: previous step's I, D, C (DKK) followed by
// remaining effectiveness of the seven deployable kinds.
inline constexpr int kZoneFeatures = 3 + kNumActiveKinds;

struct EnvState {
  int step = 0;
  int num_zones = 0;
  std::vector<double> features;        // num_zones x kZoneFeatures, row-major
  std::vector<std::uint8_t> mask;      // num_zones x kNumKinds, 1 = allowed
  std::vector<ZoneEdge> adjacency;

  double feature(int zone, int f) const { return features[static_cast<std::size_t>(zone * kZoneFeatures + f)]; }
  bool allowed(int zone, Kind k) const { return mask[static_cast<std::size_t>(zone * kNumKinds + index_of(k))] != 0; }

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

// Immutable per-city data shared by every environment instance.
class CityModel {
 public:
  CityModel(CityBundle city, EnvConfig config);

  const CityBundle& city() const { return city_; }
  const EnvConfig& config() const { return config_; }
  int num_zones() const { return city_.num_zones(); }
  int horizon_steps() const { return config_.horizon.steps(); }
  const DepressionModel& flood_model() const { return flood_; }
  const ElementSampler& sampler() const { return sampler_; }
  const Router& router() const { return router_; }
  const std::vector<int>& edge_zone() const { return edge_zone_; }
  const std::vector<ZoneAttributes>& zone_attributes() const { return attributes_; }
  // Dry-network minutes of the bundle's trip table.
  const std::vector<double>& baseline_minutes() const { return baseline_; }
  bool applicable(int zone, Kind k) const;

  // Dry-network minutes for a trip table; throws DataError naming the first
  // trip without a dry route.
  std::vector<double> baseline_for(const TripTable& trips) const;

 private:
  CityBundle city_;
  EnvConfig config_;
  DepressionModel flood_;
  ElementSampler sampler_;
  Router router_;
  std::vector<int> edge_zone_;
  std::vector<ZoneAttributes> attributes_;
  std::vector<std::array<bool, kNumKinds>> applicable_;
  std::vector<double> baseline_;
};

struct StepResult {
  double reward = 0.0;  // DKK, equals -costs.total()
  bool done = false;
  CostBreakdown costs;
  RainfallEvent event;
  std::vector<Kind> actions;
};

// One annual-step adaptation MDP. Single-threaded; instances share only the
// immutable CityModel.
class Environment {
 public:
  explicit Environment(std::shared_ptr<const CityModel> model);

  // Empty ledger, zero impacts, t = 0. Forcing and demand draw from
  // independent streams derived from the seed.
  const EnvState& reset(Scenario scenario, std::uint64_t seed);

  // Deploy, charge, sample, flood, route, value, age. Throws
  // ContractViolation naming zone and kind for a masked action, before any
  // state changes; throws std::logic_error when stepping a finished or
  // unreset episode.
  StepResult step(std::span<const Kind> actions);

  const EnvState& state() const { return state_; }
  const ZoneLedger& ledger() const { return ledger_; }
  const CityModel& model() const { return *model_; }
  const TripTable& trips() const { return *trips_; }
  Scenario scenario() const { return scenario_; }
  bool done() const { return done_; }
  int num_zones() const { return model_->num_zones(); }

 private:
  void refresh_observation(const CostBreakdown* last);

  std::shared_ptr<const CityModel> model_;
  Scenario scenario_ = Scenario::Rcp45;
  Rng forcing_rng_;
  Rng demand_rng_;
  ZoneLedger ledger_;
  EnvState state_;
  bool started_ = false;
  bool done_ = false;
  const TripTable* trips_ = nullptr;
  TripTable sampled_trips_;
  std::vector<double> sampled_baseline_;
};

}  // namespace climadapt
