#include "climadapt/interventions.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace climadapt {

bool Applicability::admits(const ZoneAttributes& zone) const {
  if (min_green_fraction && zone.green_fraction < *min_green_fraction) return false;
  if (max_slope && zone.mean_slope > *max_slope) return false;
  if (min_road_length_m && zone.road_length_m < *min_road_length_m) return false;
  return true;
}

InterventionCatalog::InterventionCatalog() {
  // capacity m3, lifetime y, implementation DKK, maintenance DKK/y
  auto set = [this](Kind k, double cap, int life, double impl, double maint, Applicability app) {
    specs_[static_cast<std::size_t>(index_of(k))] = InterventionSpec{cap, life, impl, maint, app};
  };
  set(Kind::DoNothing, 0.0, 1, 0.0, 0.0, {});
  set(Kind::BioretentionPlanters, 300.0, 25, 1.2e6, 2.5e4, {.min_green_fraction = 0.05});
  set(Kind::Soakaway, 450.0, 30, 1.6e6, 1.5e4, {.max_slope = 0.08});
  set(Kind::StorageTank, 1500.0, 50, 5.5e6, 4.0e4, {});
  set(Kind::PorousAsphalt, 350.0, 20, 2.8e6, 5.0e4, {.min_road_length_m = 200.0});
  set(Kind::PerviousConcrete, 400.0, 30, 3.4e6, 4.5e4, {.min_road_length_m = 200.0});
  set(Kind::PermeablePavers, 320.0, 25, 2.2e6, 3.5e4, {});
  set(Kind::GridPavers, 220.0, 20, 1.0e6, 2.0e4, {.min_green_fraction = 0.02});
}

bool InterventionCatalog::applicable(Kind k, const ZoneAttributes& zone) const {
  if (k == Kind::DoNothing) return true;
  return (*this)[k].applicability.admits(zone);
}

void InterventionCatalog::validate() const {
  for (int i = 0; i < kNumKinds; ++i) {
    const auto& s = specs_[static_cast<std::size_t>(i)];
    const auto name = kKindNames[static_cast<std::size_t>(i)];
    auto bad = [&](std::string_view field) {
      throw ConfigError(fmt::format("catalog.{}.{}: invalid value", name, field));
    };
    if (!(s.capacity_m3 >= 0.0) || !std::isfinite(s.capacity_m3)) bad("capacity_m3");
    if (s.lifetime_years < 1) bad("lifetime_years");
    if (!(s.implementation_cost_dkk >= 0.0) || !std::isfinite(s.implementation_cost_dkk)) bad("implementation_cost_dkk");
    if (!(s.maintenance_cost_dkk_per_year >= 0.0) || !std::isfinite(s.maintenance_cost_dkk_per_year)) {
      bad("maintenance_cost_dkk_per_year");
    }
  }
  const auto& none = (*this)[Kind::DoNothing];
  if (none.capacity_m3 != 0.0 || none.implementation_cost_dkk != 0.0 || none.maintenance_cost_dkk_per_year != 0.0) {
    throw ConfigError("catalog.DoNothing: must have zero capacity and zero costs");
  }
}

LedgerEntry decay_effectiveness(LedgerEntry entry, const DecayConfig& decay) {
  const double age = entry.age_years;
  switch (decay.schedule) {
    case DecaySchedule::Linear:
      entry.remaining_effectiveness = std::max(0.0, 1.0 - age / entry.lifetime_years);
      break;
    case DecaySchedule::Exponential:
      entry.remaining_effectiveness = std::pow(0.5, age / decay.half_life_years);
      break;
  }
  return entry;
}

bool ZoneLedger::is_active(int zone, Kind k) const { return find(zone, k) != nullptr; }

const LedgerEntry* ZoneLedger::find(int zone, Kind k) const {
  for (const auto& e : zones_[static_cast<std::size_t>(zone)]) {
    if (e.kind == k) return &e;
  }
  return nullptr;
}

void ZoneLedger::deploy(int zone, Kind k, const InterventionSpec& spec) {
  if (k == Kind::DoNothing) throw ContractViolation("DoNothing cannot be deployed");
  if (is_active(zone, k)) {
    throw ContractViolation(fmt::format("zone {}: {} is already active", zone, name_of(k)));
  }
  auto& list = zones_[static_cast<std::size_t>(zone)];
  list.push_back(LedgerEntry{k, 0, spec.lifetime_years, 1.0});
  std::sort(list.begin(), list.end(), [](const LedgerEntry& a, const LedgerEntry& b) { return a.kind < b.kind; });
}

double ZoneLedger::effective_capacity_m3(int zone, const InterventionCatalog& catalog) const {
  double total = 0.0;
  for (const auto& e : zones_[static_cast<std::size_t>(zone)]) total += catalog[e.kind].capacity_m3 * e.remaining_effectiveness;
  return total;
}

double ZoneLedger::maintenance_dkk(int zone, const InterventionCatalog& catalog) const {
  double total = 0.0;
  for (const auto& e : zones_[static_cast<std::size_t>(zone)]) total += catalog[e.kind].maintenance_cost_dkk_per_year;
  return total;
}

std::array<double, kNumActiveKinds> ZoneLedger::effectiveness_vector(int zone) const {
  std::array<double, kNumActiveKinds> z{};
  for (const auto& e : zones_[static_cast<std::size_t>(zone)]) {
    z[static_cast<std::size_t>(index_of(e.kind) - 1)] = e.remaining_effectiveness;
  }
  return z;
}

void ZoneLedger::age(const DecayConfig& decay) {
  for (auto& list : zones_) {
    for (auto& e : list) {
      ++e.age_years;
      if (e.age_years < e.lifetime_years) e = decay_effectiveness(e, decay);
    }
    std::erase_if(list, [](const LedgerEntry& e) { return e.age_years >= e.lifetime_years; });
  }
}

}  // namespace climadapt
