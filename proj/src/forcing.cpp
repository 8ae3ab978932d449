#include "climadapt/forcing.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "climadapt/text_io.hpp"

namespace climadapt {

InverseCdf::InverseCdf(std::vector<QuantileKnot> knots) : knots_(std::move(knots)) {
  validate_quantiles(knots_, "quantile table");
}

double InverseCdf::operator()(double p) const {
  p = std::clamp(p, 0.0, 1.0);
  // First knot with probability >= p.
  const auto it = std::lower_bound(knots_.begin(), knots_.end(), p,
                                   [](const QuantileKnot& k, double v) { return k.probability < v; });
  if (it == knots_.begin()) return it->depth_mm;
  if (it == knots_.end()) return knots_.back().depth_mm;
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double w = (p - lo.probability) / (hi.probability - lo.probability);
  return lo.depth_mm + w * (hi.depth_mm - lo.depth_mm);
}

void validate_quantiles(const std::vector<QuantileKnot>& knots, std::string_view context) {
  if (knots.size() < 2) throw ConfigError(fmt::format("{}: needs at least two knots", context));
  if (knots.front().probability != 0.0 || knots.back().probability != 1.0) {
    throw ConfigError(fmt::format("{}: probabilities must start at 0 and end at 1", context));
  }
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const auto& k = knots[i];
    if (!std::isfinite(k.probability) || !std::isfinite(k.depth_mm) || k.depth_mm < 0.0) {
      throw ConfigError(fmt::format("{}: knot {} has invalid values", context, i));
    }
    if (i > 0 && !(k.probability > knots[i - 1].probability)) {
      throw ConfigError(fmt::format("{}: probabilities must be strictly increasing (knot {})", context, i));
    }
    if (i > 0 && k.depth_mm < knots[i - 1].depth_mm) {
      throw ConfigError(fmt::format("{}: rainfall depths must be non-decreasing (knot {})", context, i));
    }
  }
}

void validate(const ScenarioStats& stats, const Horizon& horizon) {
  const auto name = name_of(stats.scenario);
  if (stats.slices.empty()) throw ConfigError(fmt::format("scenario {}: no time slices", name));
  auto slices = stats.slices;
  std::sort(slices.begin(), slices.end(),
            [](const TimeSlice& a, const TimeSlice& b) { return a.first_year < b.first_year; });
  for (std::size_t i = 0; i < slices.size(); ++i) {
    const auto& s = slices[i];
    if (s.last_year < s.first_year) {
      throw ConfigError(fmt::format("scenario {}: slice {}-{} is empty", name, s.first_year, s.last_year));
    }
    if (i > 0 && s.first_year != slices[i - 1].last_year + 1) {
      throw ConfigError(fmt::format("scenario {}: slices must be contiguous without overlap near year {}", name,
                                    s.first_year));
    }
    validate_quantiles(s.quantiles, fmt::format("scenario {} slice {}-{}", name, s.first_year, s.last_year));
  }
  if (slices.front().first_year != horizon.first_year || slices.back().last_year != horizon.last_year) {
    throw ConfigError(fmt::format("scenario {}: slices cover {}-{}, horizon is {}-{}", name,
                                  slices.front().first_year, slices.back().last_year, horizon.first_year,
                                  horizon.last_year));
  }
}

namespace {

const TimeSlice& slice_for(const ScenarioStats& stats, int year) {
  for (const auto& s : stats.slices) {
    if (s.contains(year)) return s;
  }
  throw ConfigError(fmt::format("scenario {}: year {} is outside all time slices", name_of(stats.scenario), year));
}

double midpoint(const TimeSlice& s) { return 0.5 * (s.first_year + s.last_year); }

}  // namespace

InverseCdf build_cdf(const ScenarioStats& stats, int year) { return InverseCdf(slice_for(stats, year).quantiles); }

double rainfall_quantile(const ScenarioStats& stats, int year, double p, const ForcingOptions& options) {
  const auto& here = slice_for(stats, year);
  if (!options.blend_slices) return InverseCdf(here.quantiles)(p);

  // Blend towards the neighbouring slice on the side of `year` relative to
  // this slice's midpoint.
  const double y = year;
  const TimeSlice* other = nullptr;
  for (const auto& s : stats.slices) {
    if (y < midpoint(here) && s.last_year + 1 == here.first_year) other = &s;
    if (y > midpoint(here) && s.first_year == here.last_year + 1) other = &s;
  }
  const double q_here = InverseCdf(here.quantiles)(p);
  if (other == nullptr) return q_here;
  const double q_other = InverseCdf(other->quantiles)(p);
  const double w = std::abs(y - midpoint(here)) / std::abs(midpoint(*other) - midpoint(here));
  return (1.0 - w) * q_here + w * q_other;
}

RainfallEvent sample_event(const ScenarioStats& stats, int step_index, Rng& rng, const Horizon& horizon,
                           const ForcingOptions& options) {
  const int year = horizon.year_of(step_index);
  const double u = uniform01(rng);
  return RainfallEvent{step_index, year, rainfall_quantile(stats, year, u, options)};
}

ScenarioStats parse_scenario_stats(std::string_view text, std::string_view source) {
  ScenarioStats stats;
  bool have_scenario = false;
  bool have_format = false;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto where = fmt::format("{}:{}", source, line_no);
    const auto colon = t.find(':');
    if (colon != std::string::npos) {
      const auto key = trim(std::string_view(t).substr(0, colon));
      const auto value = trim(std::string_view(t).substr(colon + 1));
      if (key == "format") {
        if (value != "climadapt-scenario/1") throw ConfigError(fmt::format("{}: unsupported format '{}'", where, value));
        have_format = true;
      } else if (key == "scenario") {
        const auto s = parse_scenario(value);
        if (!s) throw ConfigError(fmt::format("{}: unknown scenario '{}'; valid ids: RCP2.6, RCP4.5, RCP8.5", where, value));
        stats.scenario = *s;
        have_scenario = true;
      } else if (key == "slice") {
        const auto years = tokens(value);
        if (years.size() != 2) throw ConfigError(fmt::format("{}: slice needs '<first_year> <last_year>'", where));
        TimeSlice slice;
        slice.first_year = static_cast<int>(parse_int(years[0], where));
        slice.last_year = static_cast<int>(parse_int(years[1], where));
        stats.slices.push_back(std::move(slice));
      } else {
        throw ConfigError(fmt::format("{}: unknown key '{}'", where, key));
      }
      continue;
    }
    const auto row = tokens(t);
    if (row.size() != 2) throw ConfigError(fmt::format("{}: expected '<probability> <depth_mm>'", where));
    if (stats.slices.empty()) throw ConfigError(fmt::format("{}: quantile row before any slice", where));
    try {
      stats.slices.back().quantiles.push_back({parse_double(row[0], where), parse_double(row[1], where)});
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
  }
  if (!have_format) throw ConfigError(fmt::format("{}: missing 'format' line", source));
  if (!have_scenario) throw ConfigError(fmt::format("{}: missing 'scenario' line", source));
  return stats;
}

ScenarioStats load_scenario_stats(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_scenario_stats(text, path.string());
}

std::string format_scenario_stats(const ScenarioStats& stats) {
  std::string out = "# daily rainfall quantiles per time slice: <cumulative probability> <depth mm>\n";
  out += "format: climadapt-scenario/1\n";
  out += fmt::format("scenario: {}\n", name_of(stats.scenario));
  for (const auto& s : stats.slices) {
    out += fmt::format("slice: {} {}\n", s.first_year, s.last_year);
    for (const auto& k : s.quantiles) out += fmt::format("{} {}\n", format_number(k.probability), format_number(k.depth_mm));
  }
  return out;
}

ScenarioStats default_scenario_stats(Scenario scenario) {
  // Annual-maximum daily rainfall (mm) for the reference climate.
  static constexpr QuantileKnot kBase[] = {
      {0.0, 8.0},  {0.1, 15.0},  {0.25, 20.0}, {0.5, 27.0},  {0.75, 36.0},
      {0.9, 46.0}, {0.95, 54.0}, {0.99, 75.0}, {1.0, 110.0},
  };
  // Intensity multipliers for 2024-2050, 2051-2075, 2076-2100.
  static constexpr double kScale[kNumScenarios][3] = {
      {1.00, 1.04, 1.05},
      {1.02, 1.08, 1.13},
      {1.03, 1.13, 1.28},
  };
  static constexpr int kSliceYears[3][2] = {{2024, 2050}, {2051, 2075}, {2076, 2100}};

  ScenarioStats stats;
  stats.scenario = scenario;
  for (int s = 0; s < 3; ++s) {
    TimeSlice slice{kSliceYears[s][0], kSliceYears[s][1], {}};
    const double m = kScale[index_of(scenario)][s];
    for (const auto& k : kBase) {
      // Heavier tails intensify faster than the median.
      const double depth = std::round(k.depth_mm * std::pow(m, 1.0 + k.probability) * 100.0) / 100.0;
      slice.quantiles.push_back({k.probability, depth});
    }
    stats.slices.push_back(std::move(slice));
  }
  return stats;
}

}  // namespace climadapt
