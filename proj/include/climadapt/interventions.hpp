#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "climadapt/core.hpp"

namespace climadapt {

// Zone attributes consulted by applicability predicates.
struct ZoneAttributes {
  double area_m2 = 0.0;
  double green_fraction = 0.0;  // share of unsealed surface in [0, 1]
  double mean_slope = 0.0;      // mean absolute terrain gradient (m/m)
  double road_length_m = 0.0;   // length of drivable edges attributed to the zone
};

// Threshold predicate; unset bounds always pass.
struct Applicability {
  std::optional<double> min_green_fraction = std::nullopt;
  std::optional<double> max_slope = std::nullopt;
  std::optional<double> min_road_length_m = std::nullopt;

  bool admits(const ZoneAttributes& zone) const;
};

struct InterventionSpec {
  double capacity_m3 = 0.0;  // runoff volume removed per event at full effectiveness
  int lifetime_years = 1;
  double implementation_cost_dkk = 0.0;
  double maintenance_cost_dkk_per_year = 0.0;
  Applicability applicability;
};

class InterventionCatalog {
 public:
  InterventionCatalog();  // literature-informed defaults

  const InterventionSpec& operator[](Kind k) const { return specs_[static_cast<std::size_t>(index_of(k))]; }
  InterventionSpec& operator[](Kind k) { return specs_[static_cast<std::size_t>(index_of(k))]; }

  bool applicable(Kind k, const ZoneAttributes& zone) const;
  // Throws ConfigError naming the offending kind and field.
  void validate() const;

 private:
  std::array<InterventionSpec, kNumKinds> specs_;
};

enum class DecaySchedule { Linear, Exponential };

struct DecayConfig {
  DecaySchedule schedule = DecaySchedule::Linear;
  double half_life_years = 10.0;  // exponential schedule only
};

struct LedgerEntry {
  Kind kind = Kind::DoNothing;
  int age_years = 0;
  int lifetime_years = 1;
  double remaining_effectiveness = 1.0;

  friend bool operator==(const LedgerEntry&, const LedgerEntry&) = default;
};

// Remaining effectiveness for the entry's current age. Linear:
// max(0, 1 - age/lifetime). Exponential: 0.5^(age/half_life).
LedgerEntry decay_effectiveness(LedgerEntry entry, const DecayConfig& decay = {});

// Active interventions per zone, at most one entry per kind.
class ZoneLedger {
 public:
  ZoneLedger() = default;
  explicit ZoneLedger(int num_zones) : zones_(static_cast<std::size_t>(num_zones)) {}

  int num_zones() const { return static_cast<int>(zones_.size()); }
  std::span<const LedgerEntry> entries(int zone) const { return zones_[static_cast<std::size_t>(zone)]; }
  bool is_active(int zone, Kind k) const;
  const LedgerEntry* find(int zone, Kind k) const;

  // Adds a fresh entry at age 0. Throws ContractViolation when the kind is
  // already active in the zone or is DoNothing.
  void deploy(int zone, Kind k, const InterventionSpec& spec);

  // Volume removed per event: sum of capacity x remaining effectiveness.
  double effective_capacity_m3(int zone, const InterventionCatalog& catalog) const;
  // Sum of maintenance rates of active entries.
  double maintenance_dkk(int zone, const InterventionCatalog& catalog) const;
  // Per-kind remaining effectiveness for kinds 1..7, zero when inactive.
  std::array<double, kNumActiveKinds> effectiveness_vector(int zone) const;

  // End-of-step ageing: age += 1, entries reaching their lifetime are
  // removed, remaining ones get their effectiveness recomputed.
  void age(const DecayConfig& decay);

  friend bool operator==(const ZoneLedger&, const ZoneLedger&) = default;

 private:
  std::vector<std::vector<LedgerEntry>> zones_;
};

}  // namespace climadapt
