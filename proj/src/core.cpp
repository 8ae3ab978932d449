#include "climadapt/core.hpp"

#include <fmt/format.h>

namespace climadapt {

std::optional<Kind> parse_kind(std::string_view name) {
  for (int i = 0; i < kNumKinds; ++i) {
    if (kKindNames[i] == name) return kind_at(i);
  }
  return std::nullopt;
}

std::optional<Mode> parse_mode(std::string_view name) {
  for (int i = 0; i < kNumModes; ++i) {
    if (kModeNames[i] == name) return static_cast<Mode>(i);
  }
  return std::nullopt;
}

std::string to_string(ModeSet s) {
  std::string out;
  for (int i = 0; i < kNumModes; ++i) {
    if (!s.has(static_cast<Mode>(i))) continue;
    if (!out.empty()) out += '|';
    out += kModeNames[i];
  }
  return out;
}

std::optional<ModeSet> parse_mode_set(std::string_view text) {
  ModeSet set;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto bar = text.find('|', start);
    const auto token = text.substr(start, bar == std::string_view::npos ? text.size() - start : bar - start);
    const auto mode = parse_mode(token);
    if (!mode) return std::nullopt;
    set.add(*mode);
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  if (set.empty()) return std::nullopt;
  return set;
}

std::optional<Scenario> parse_scenario(std::string_view name) {
  for (int i = 0; i < kNumScenarios; ++i) {
    if (kScenarioNames[i] == name) return kAllScenarios[i];
  }
  return std::nullopt;
}

Scenario require_scenario(std::string_view name) {
  if (auto s = parse_scenario(name)) return *s;
  throw ConfigError(fmt::format("unknown scenario '{}'; valid ids: RCP2.6, RCP4.5, RCP8.5", name));
}

}  // namespace climadapt
