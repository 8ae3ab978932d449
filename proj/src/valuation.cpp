#include "climadapt/valuation.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace climadapt {

DepthDamageCurve::DepthDamageCurve()
    : DepthDamageCurve({{0.0, 0.0}, {0.05, 0.02}, {0.15, 0.10}, {0.3, 0.25}, {0.5, 0.40}, {1.0, 0.70}, {2.0, 1.0}}) {}

DepthDamageCurve::DepthDamageCurve(std::vector<Knot> knots) : knots_(std::move(knots)) {
  if (knots_.empty() || knots_.front().depth_m != 0.0) {
    throw ConfigError("valuation.damage_curve: first knot must be at depth 0");
  }
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    const auto& k = knots_[i];
    if (!std::isfinite(k.depth_m) || !(k.fraction >= 0.0 && k.fraction <= 1.0)) {
      throw ConfigError(fmt::format("valuation.damage_curve[{}]: fraction must lie in [0, 1]", i));
    }
    if (i > 0 && !(k.depth_m > knots_[i - 1].depth_m)) {
      throw ConfigError(fmt::format("valuation.damage_curve[{}]: depths must strictly increase", i));
    }
    if (i > 0 && k.fraction < knots_[i - 1].fraction) {
      throw ConfigError(fmt::format("valuation.damage_curve[{}]: fractions must be non-decreasing", i));
    }
  }
}

double DepthDamageCurve::operator()(double depth_m) const {
  if (depth_m <= knots_.front().depth_m) return knots_.front().fraction;
  if (depth_m >= knots_.back().depth_m) return knots_.back().fraction;
  const auto hi = std::upper_bound(knots_.begin(), knots_.end(), depth_m,
                                   [](double d, const Knot& k) { return d < k.depth_m; });
  const auto lo = hi - 1;
  const double w = (depth_m - lo->depth_m) / (hi->depth_m - lo->depth_m);
  return std::clamp(lo->fraction + w * (hi->fraction - lo->fraction), 0.0, 1.0);
}

void ValuationParams::validate() const {
  for (int m = 0; m < kNumModes; ++m) {
    const auto name = kModeNames[static_cast<std::size_t>(m)];
    const double vot = value_of_time_dkk_per_hour[static_cast<std::size_t>(m)];
    const double cancel = cancelled_trip_cost_dkk[static_cast<std::size_t>(m)];
    if (!(vot >= 0.0) || !std::isfinite(vot)) {
      throw ConfigError(fmt::format("valuation.value_of_time_dkk_per_hour.{}: must be a finite value >= 0", name));
    }
    if (!(cancel >= 0.0) || !std::isfinite(cancel)) {
      throw ConfigError(fmt::format("valuation.cancelled_trip_cost_dkk.{}: must be a finite value >= 0", name));
    }
  }
  if (!(annualization > 0.0) || !std::isfinite(annualization)) {
    throw ConfigError("valuation.annualization: must be > 0");
  }
}

ZoneCosts CostBreakdown::city() const {
  ZoneCosts sum;
  for (const auto& z : zones) {
    sum.impact_dkk += z.impact_dkk;
    sum.delay_dkk += z.delay_dkk;
    sum.cancellation_dkk += z.cancellation_dkk;
    sum.investment_dkk += z.investment_dkk;
    sum.maintenance_dkk += z.maintenance_dkk;
  }
  return sum;
}

double CostBreakdown::total() const {
  double t = 0.0;
  for (const auto& z : zones) t += z.total();
  return t;
}

std::vector<double> infrastructure_damage(const TransportNetwork& net, std::span<const double> edge_depth,
                                          std::span<const int> edge_zone, int num_zones,
                                          const DepthDamageCurve& curve) {
  if (edge_depth.size() != net.num_edges() || edge_zone.size() != net.num_edges()) {
    throw ShapeError("infrastructure_damage: depth and zone arrays must have one entry per edge");
  }
  std::vector<double> out(static_cast<std::size_t>(num_zones), 0.0);
  for (const auto& e : net.edges()) {
    const int z = edge_zone[static_cast<std::size_t>(e.id)];
    const double d = edge_depth[static_cast<std::size_t>(e.id)];
    if (z == kNoZone || d <= 0.0) continue;
    out[static_cast<std::size_t>(z)] += curve(d) * e.recon_cost_per_m * e.length_m;
  }
  return out;
}

namespace {

int origin_zone(const TransportNetwork& net, const Trip& t) { return net.nodes()[static_cast<std::size_t>(t.origin)].zone; }

}  // namespace

std::vector<double> delay_cost(const TransportNetwork& net, const TripTable& trips,
                               std::span<const TripOutcome> outcomes, int num_zones,
                               const std::array<double, kNumModes>& value_of_time_dkk_per_hour) {
  std::vector<double> out(static_cast<std::size_t>(num_zones), 0.0);
  for (const auto& o : outcomes) {
    if (o.cancelled) continue;
    const auto& t = trips.trips[o.trip];
    const int z = origin_zone(net, t);
    if (z == kNoZone) continue;
    const double delay = std::max(0.0, o.disrupted_minutes - o.baseline_minutes);
    out[static_cast<std::size_t>(z)] +=
        delay * t.weight * value_of_time_dkk_per_hour[static_cast<std::size_t>(index_of(t.mode))] / 60.0;
  }
  return out;
}

std::vector<double> cancellation_cost(const TransportNetwork& net, const TripTable& trips,
                                      std::span<const TripOutcome> outcomes, int num_zones,
                                      const std::array<double, kNumModes>& cancelled_trip_cost_dkk) {
  std::vector<double> out(static_cast<std::size_t>(num_zones), 0.0);
  for (const auto& o : outcomes) {
    if (!o.cancelled) continue;
    const auto& t = trips.trips[o.trip];
    const int z = origin_zone(net, t);
    if (z == kNoZone) continue;
    out[static_cast<std::size_t>(z)] += t.weight * cancelled_trip_cost_dkk[static_cast<std::size_t>(index_of(t.mode))];
  }
  return out;
}

ActionCosts action_costs(const ZoneLedger& prev, std::span<const Kind> actions, const InterventionCatalog& catalog) {
  if (static_cast<int>(actions.size()) != prev.num_zones()) {
    throw ShapeError(fmt::format("action_costs: {} actions for {} zones", actions.size(), prev.num_zones()));
  }
  ActionCosts out{std::vector<double>(actions.size(), 0.0), std::vector<double>(actions.size(), 0.0), prev};
  for (std::size_t z = 0; z < actions.size(); ++z) {
    const Kind k = actions[z];
    if (k == Kind::DoNothing) continue;
    out.ledger.deploy(static_cast<int>(z), k, catalog[k]);
    out.investment_dkk[z] = catalog[k].implementation_cost_dkk;
  }
  for (std::size_t z = 0; z < actions.size(); ++z) out.maintenance_dkk[z] = out.ledger.maintenance_dkk(static_cast<int>(z), catalog);
  return out;
}

}  // namespace climadapt
