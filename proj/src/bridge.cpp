#include "climadapt/bridge.hpp"

#include <fmt/format.h>

#include "climadapt/config.hpp"

namespace climadapt {

namespace {

std::shared_ptr<const CityModel> load_model(const std::filesystem::path& bundle_dir,
                                            const std::filesystem::path& config_path) {
  EnvConfig env;
  if (!config_path.empty()) env = load_run_config(config_path).env;
  return std::make_shared<const CityModel>(load_city(bundle_dir), env);
}

}  // namespace

BridgeObservation to_bridge(const EnvState& state) {
  BridgeObservation o;
  o.step = state.step;
  o.num_zones = state.num_zones;
  o.node_features = state.features;
  for (const auto& [a, b] : state.adjacency) {
    o.edge_index.push_back(a);
    o.edge_index.push_back(b);
  }
  o.action_mask = state.mask;
  return o;
}

EnvHandle::EnvHandle(std::shared_ptr<const CityModel> model) : env_(std::move(model)) {}

EnvHandle::EnvHandle(const std::filesystem::path& bundle_dir, const std::filesystem::path& config_path)
    : env_(load_model(bundle_dir, config_path)) {}

BridgeObservation EnvHandle::reset(std::string_view scenario, std::uint64_t seed) {
  return to_bridge(env_.reset(require_scenario(scenario), seed));
}

BridgeStep EnvHandle::step(std::span<const std::int64_t> actions) {
  if (actions.size() != static_cast<std::size_t>(num_zones())) {
    throw ContractViolation(fmt::format("expected {} actions, got {}", num_zones(), actions.size()));
  }
  std::vector<Kind> kinds;
  for (std::size_t z = 0; z < actions.size(); ++z) {
    if (actions[z] < 0 || actions[z] >= kNumKinds) {
      throw ContractViolation(fmt::format("zone {}: action index {} is outside 0..{}", z, actions[z], kNumKinds - 1));
    }
    kinds.push_back(kind_at(static_cast<int>(actions[z])));
  }
  const auto r = env_.step(kinds);
  BridgeStep s;
  s.observation = to_bridge(env_.state());
  s.reward = r.reward;
  s.terminated = r.done;
  s.year = r.event.year;
  s.rainfall_mm = r.event.depth_mm;
  for (const auto& c : r.costs.zones) {
    s.costs.insert(s.costs.end(),
                   {c.impact_dkk, c.delay_dkk, c.cancellation_dkk, c.investment_dkk, c.maintenance_dkk});
  }
  return s;
}

}  // namespace climadapt
