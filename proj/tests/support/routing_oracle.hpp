#pragma once

// Exhaustive simple-path enumeration, usable on graphs of about ten nodes.

#include <algorithm>
#include <span>
#include <vector>

#include "climadapt/network.hpp"

namespace climadapt::testing {

inline TransportNetwork random_small_network(Rng& rng, int n, double edge_prob) {
  std::vector<NetNode> nodes;
  for (int i = 0; i < n; ++i) nodes.push_back({i, uniform01(rng) * 500.0, uniform01(rng) * 500.0, 0});
  std::vector<NetEdge> edges;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a == b || uniform01(rng) >= edge_prob) continue;
      ModeSet modes;
      for (auto m : {Mode::Drive, Mode::Cycle, Mode::Walk}) {
        if (uniform01(rng) < 0.7) modes.add(m);
      }
      if (modes.empty()) modes.add(Mode::Walk);
      // Integer lengths and a few speeds make equal-cost alternatives common.
      const double length = 50.0 * static_cast<double>(1 + uniform_index(rng, 6));
      const double speeds[] = {10.0, 20.0, 30.0, 50.0};
      edges.push_back({static_cast<int>(edges.size()), a, b, length, modes, speeds[uniform_index(rng, 4)], 1000.0});
    }
  }
  return TransportNetwork(std::move(nodes), std::move(edges));
}

namespace detail {

inline void enumerate(const TransportNetwork& net, int u, int target, Mode mode, std::span<const double> depth,
                      const DisruptionParams& params, double elapsed, std::vector<char>& on_path, double& best) {
  if (u == target) {
    best = std::min(best, elapsed);
    return;
  }
  for (const auto& e : net.edges()) {
    if (e.from != u || on_path[static_cast<std::size_t>(e.to)]) continue;
    const double w = edge_minutes(e, mode, depth.empty() ? 0.0 : depth[static_cast<std::size_t>(e.id)], params);
    if (w == kUnreachable) continue;
    on_path[static_cast<std::size_t>(e.to)] = 1;
    enumerate(net, e.to, target, mode, depth, params, elapsed + w, on_path, best);
    on_path[static_cast<std::size_t>(e.to)] = 0;
  }
}

}  // namespace detail

// Minimum travel minutes over all simple paths, kUnreachable if none.
inline double brute_force_minutes(const TransportNetwork& net, int origin, int target, Mode mode,
                                  std::span<const double> depth, const DisruptionParams& params = {}) {
  std::vector<char> on_path(net.num_nodes(), 0);
  on_path[static_cast<std::size_t>(origin)] = 1;
  double best = kUnreachable;
  detail::enumerate(net, origin, target, mode, depth, params, 0.0, on_path, best);
  return best;
}

}  // namespace climadapt::testing
