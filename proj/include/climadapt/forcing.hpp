#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "climadapt/core.hpp"

namespace climadapt {

// Planning horizon in calendar years, both ends inclusive. One decision step
// per year.
struct Horizon {
  int first_year = 2024;
  int last_year = 2100;

  int steps() const { return last_year - first_year + 1; }
  int year_of(int step_index) const { return first_year + step_index; }
};

struct QuantileKnot {
  double probability = 0.0;
  double depth_mm = 0.0;
};

// Quantile table valid for an inclusive range of years.
struct TimeSlice {
  int first_year = 0;
  int last_year = 0;
  std::vector<QuantileKnot> quantiles;

  bool contains(int year) const { return year >= first_year && year <= last_year; }
};

// Daily-rainfall statistics for one climate scenario.
struct ScenarioStats {
  Scenario scenario = Scenario::Rcp45;
  std::vector<TimeSlice> slices;
};

struct RainfallEvent {
  int step_index = 0;
  int year = 0;
  double depth_mm = 0.0;
};

struct ForcingOptions {
  // Linear blending of neighbouring slices between slice midpoints. Off by
  // default: the distribution is a step function of the year.
  bool blend_slices = false;
};

// Piecewise-linear inverse CDF over a validated quantile table.
class InverseCdf {
 public:
  explicit InverseCdf(std::vector<QuantileKnot> knots);

  // p is clamped to [0, 1].
  double operator()(double p) const;
  const std::vector<QuantileKnot>& knots() const { return knots_; }

 private:
  std::vector<QuantileKnot> knots_;
};

// Throws ConfigError describing the first violated invariant.
void validate_quantiles(const std::vector<QuantileKnot>& knots, std::string_view context);
void validate(const ScenarioStats& stats, const Horizon& horizon);

// Inverse CDF of the slice containing `year`. Throws ConfigError when no
// slice covers the year.
InverseCdf build_cdf(const ScenarioStats& stats, int year);

// Rainfall quantile for `year` at probability p, honouring blend_slices.
double rainfall_quantile(const ScenarioStats& stats, int year, double p, const ForcingOptions& options = {});

// Draws u ~ U[0,1) from rng and maps it through the inverse CDF.
RainfallEvent sample_event(const ScenarioStats& stats, int step_index, Rng& rng, const Horizon& horizon = {},
                           const ForcingOptions& options = {});

// Scenario statistics text format (see docs/formats.md).
ScenarioStats parse_scenario_stats(std::string_view text, std::string_view source);
ScenarioStats load_scenario_stats(const std::filesystem::path& path);
std::string format_scenario_stats(const ScenarioStats& stats);

// Built-in synthetic statistics for the 2024-2100 horizon: annual-maximum
// daily rainfall, intensifying with forcing level and over time.
ScenarioStats default_scenario_stats(Scenario scenario);

}  // namespace climadapt
