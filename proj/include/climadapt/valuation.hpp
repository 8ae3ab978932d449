#pragma once

#include <array>
#include <span>
#include <vector>

#include "climadapt/interventions.hpp"
#include "climadapt/network.hpp"

namespace climadapt {

// Piecewise-linear damage fraction over depth, clamped to [0, 1]. Depths
// beyond the last knot use the last fraction.
class DepthDamageCurve {
 public:
  struct Knot {
    double depth_m = 0.0;
    double fraction = 0.0;
  };

  DepthDamageCurve();  // defaults for paved transport assets
  // Throws ConfigError unless depths strictly increase, start at 0 and
  // fractions are non-decreasing within [0, 1].
  explicit DepthDamageCurve(std::vector<Knot> knots);

  double operator()(double depth_m) const;
  const std::vector<Knot>& knots() const { return knots_; }

 private:
  std::vector<Knot> knots_;
};

struct ValuationParams {
  DepthDamageCurve damage_curve;
  std::array<double, kNumModes> value_of_time_dkk_per_hour = {130.0, 110.0, 110.0};
  std::array<double, kNumModes> cancelled_trip_cost_dkk = {500.0, 250.0, 200.0};
  // Multiplier turning one sampled event's impacts into a step's impacts.
  double annualization = 1.0;

  // Throws ConfigError naming the field.
  void validate() const;
};

struct ZoneCosts {
  double impact_dkk = 0.0;        // I: infrastructure damage
  double delay_dkk = 0.0;         // D: travel delay
  double cancellation_dkk = 0.0;  // C: cancelled trips
  double investment_dkk = 0.0;    // A: newly deployed interventions
  double maintenance_dkk = 0.0;   // M: active interventions

  double total() const { return impact_dkk + delay_dkk + cancellation_dkk + investment_dkk + maintenance_dkk; }
  friend bool operator==(const ZoneCosts&, const ZoneCosts&) = default;
};

struct CostBreakdown {
  std::vector<ZoneCosts> zones;

  ZoneCosts city() const;  // component-wise sum over zones
  double total() const;
};

// Per-zone damage: curve(edge depth) x reconstruction cost per m x length,
// attributed through edge_zone (kNoZone edges are ignored).
std::vector<double> infrastructure_damage(const TransportNetwork& net, std::span<const double> edge_depth,
                                          std::span<const int> edge_zone, int num_zones,
                                          const DepthDamageCurve& curve);

// Per-zone delay cost of routed trips, attributed to the origin node's zone.
std::vector<double> delay_cost(const TransportNetwork& net, const TripTable& trips,
                               std::span<const TripOutcome> outcomes, int num_zones,
                               const std::array<double, kNumModes>& value_of_time_dkk_per_hour);

// Per-zone cost of cancelled trips, attributed to the origin node's zone.
std::vector<double> cancellation_cost(const TransportNetwork& net, const TripTable& trips,
                                      std::span<const TripOutcome> outcomes, int num_zones,
                                      const std::array<double, kNumModes>& cancelled_trip_cost_dkk);

struct ActionCosts {
  std::vector<double> investment_dkk;
  std::vector<double> maintenance_dkk;
  ZoneLedger ledger;  // after deployment
};

// Deploys every non-DoNothing action at age 0 and charges implementation
// costs (A) plus maintenance of all active entries including the new ones
// (M). Throws ContractViolation on a duplicate kind.
ActionCosts action_costs(const ZoneLedger& prev, std::span<const Kind> actions, const InterventionCatalog& catalog);

}  // namespace climadapt
