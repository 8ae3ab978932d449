#include "climadapt/env.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace climadapt {

namespace {

constexpr std::uint64_t kForcingStream = 1;
constexpr std::uint64_t kDemandStream = 2;

}  // namespace

void EnvConfig::validate() const {
  if (horizon.last_year < horizon.first_year) throw ConfigError("horizon.last_year: must not precede first_year");
  for (const auto& s : scenarios) climadapt::validate(s, horizon);
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    if (index_of(scenarios[i].scenario) != static_cast<int>(i)) {
      throw ConfigError(fmt::format("forcing.scenario_files.{}: file declares scenario {}", kScenarioNames[i],
                                    name_of(scenarios[i].scenario)));
    }
  }
  disruption.validate();
  valuation.validate();
  catalog.validate();
  if (decay.schedule == DecaySchedule::Exponential && !(decay.half_life_years > 0.0)) {
    throw ConfigError("decay.half_life_years: must be > 0");
  }
}

CityModel::CityModel(CityBundle city, EnvConfig config)
    : city_(std::move(city)),
      config_(std::move(config)),
      flood_(city_.terrain, config_.boundary),
      sampler_(city_.terrain, city_.network.segments()),
      router_(city_.network, config_.disruption) {
  config_.validate();
  climadapt::validate(city_);
  edge_zone_ = edge_zones(city_.network, city_.terrain);
  attributes_ = climadapt::zone_attributes(city_);
  applicable_.resize(static_cast<std::size_t>(num_zones()));
  for (int z = 0; z < num_zones(); ++z) {
    for (int k = 0; k < kNumKinds; ++k) {
      applicable_[static_cast<std::size_t>(z)][static_cast<std::size_t>(k)] =
          config_.catalog.applicable(kind_at(k), attributes_[static_cast<std::size_t>(z)]);
    }
  }
  baseline_ = baseline_for(city_.trips);
}

bool CityModel::applicable(int zone, Kind k) const {
  return applicable_[static_cast<std::size_t>(zone)][static_cast<std::size_t>(index_of(k))];
}

std::vector<double> CityModel::baseline_for(const TripTable& trips) const {
  validate_trips(city_.network, trips);
  auto minutes = router_.trip_minutes(trips, {});
  for (std::size_t i = 0; i < minutes.size(); ++i) {
    if (minutes[i] == kUnreachable) {
      throw DataError(fmt::format("trip {}: no {} route from node {} to node {} on the dry network", trips.trips[i].id,
                                  name_of(trips.trips[i].mode), trips.trips[i].origin, trips.trips[i].destination));
    }
  }
  return minutes;
}

Environment::Environment(std::shared_ptr<const CityModel> model) : model_(std::move(model)) {
  if (!model_) throw std::invalid_argument("Environment: null city model");
  trips_ = &model_->city().trips;
}

const EnvState& Environment::reset(Scenario scenario, std::uint64_t seed) {
  scenario_ = scenario;
  forcing_rng_.seed(derive_seed(seed, kForcingStream));
  demand_rng_.seed(derive_seed(seed, kDemandStream));
  ledger_ = ZoneLedger(num_zones());
  const auto& cfg = model_->config();
  if (cfg.resample_trips_on_reset) {
    const auto& base = model_->city().trips.trips;
    const double weight = base.empty() ? 1.0 : base.front().weight;
    sampled_trips_ = sample_trips(model_->city().network, num_zones(), static_cast<int>(base.size()), weight, demand_rng_);
    sampled_baseline_ = model_->baseline_for(sampled_trips_);
    trips_ = &sampled_trips_;
  } else {
    trips_ = &model_->city().trips;
  }
  state_ = EnvState{};
  state_.step = 0;
  state_.num_zones = num_zones();
  state_.adjacency = model_->city().adjacency;
  refresh_observation(nullptr);
  started_ = true;
  done_ = false;
  return state_;
}

void Environment::refresh_observation(const CostBreakdown* last) {
  const int z = num_zones();
  state_.features.assign(static_cast<std::size_t>(z * kZoneFeatures), 0.0);
  state_.mask.assign(static_cast<std::size_t>(z * kNumKinds), 0);
  for (int i = 0; i < z; ++i) {
    double* row = &state_.features[static_cast<std::size_t>(i * kZoneFeatures)];
    if (last != nullptr) {
      const auto& c = last->zones[static_cast<std::size_t>(i)];
      row[0] = c.impact_dkk;
      row[1] = c.delay_dkk;
      row[2] = c.cancellation_dkk;
    }
    const auto eff = ledger_.effectiveness_vector(i);
    std::copy(eff.begin(), eff.end(), row + 3);
    for (int k = 0; k < kNumKinds; ++k) {
      const Kind kind = kind_at(k);
      const bool ok = kind == Kind::DoNothing || (model_->applicable(i, kind) && !ledger_.is_active(i, kind));
      state_.mask[static_cast<std::size_t>(i * kNumKinds + k)] = ok ? 1 : 0;
    }
  }
}

StepResult Environment::step(std::span<const Kind> actions) {
  if (!started_) throw std::logic_error("step called before reset");
  if (done_) throw std::logic_error("step called on a finished episode");
  const int z = num_zones();
  if (static_cast<int>(actions.size()) != z) {
    throw ContractViolation(fmt::format("joint action has {} entries for {} zones", actions.size(), z));
  }
  for (int i = 0; i < z; ++i) {
    const Kind k = actions[static_cast<std::size_t>(i)];
    if (index_of(k) < 0 || index_of(k) >= kNumKinds) throw ContractViolation(fmt::format("zone {}: invalid action", i));
    if (!state_.allowed(i, k)) {
      throw ContractViolation(fmt::format("zone {}: action {} is masked", i, name_of(k)));
    }
  }

  const auto& cfg = model_->config();
  const auto& catalog = cfg.catalog;
  StepResult result;
  result.actions.assign(actions.begin(), actions.end());

  // (1) deployments and maintenance
  auto charged = action_costs(ledger_, actions, catalog);
  ledger_ = std::move(charged.ledger);

  // (2) rainfall, (3) flood with the updated ledger
  result.event = sample_event(cfg.scenarios[static_cast<std::size_t>(index_of(scenario_))], state_.step, forcing_rng_,
                              cfg.horizon, cfg.forcing);
  const auto field = compute_flood(result.event, model_->flood_model(), model_->sampler(), ledger_, catalog,
                                   cfg.element_depth);

  // (4) routing and impact valuation
  const bool wet = std::any_of(field.element_depth.begin(), field.element_depth.end(), [](double d) { return d > 0.0; });
  const auto& baseline = cfg.resample_trips_on_reset ? sampled_baseline_ : model_->baseline_minutes();
  const auto outcomes = route_all(model_->router(), *trips_, baseline,
                                  wet ? std::span<const double>(field.element_depth) : std::span<const double>());
  const auto& net = model_->city().network;
  const auto damage = infrastructure_damage(net, field.element_depth, model_->edge_zone(), z, cfg.valuation.damage_curve);
  const auto delay = delay_cost(net, *trips_, outcomes, z, cfg.valuation.value_of_time_dkk_per_hour);
  const auto cancel = cancellation_cost(net, *trips_, outcomes, z, cfg.valuation.cancelled_trip_cost_dkk);

  const double annual = cfg.valuation.annualization;
  result.costs.zones.resize(static_cast<std::size_t>(z));
  for (std::size_t i = 0; i < static_cast<std::size_t>(z); ++i) {
    auto& c = result.costs.zones[i];
    c.impact_dkk = damage[i] * annual;
    c.delay_dkk = delay[i] * annual;
    c.cancellation_dkk = cancel[i] * annual;
    c.investment_dkk = charged.investment_dkk[i];
    c.maintenance_dkk = charged.maintenance_dkk[i];
  }

  // (5) reward
  result.reward = -result.costs.total();

  // (6) ageing, expiry and masks, (7) advance
  ledger_.age(cfg.decay);
  ++state_.step;
  refresh_observation(&result.costs);
  done_ = state_.step >= model_->horizon_steps();
  result.done = done_;
  return result;
}

}  // namespace climadapt
