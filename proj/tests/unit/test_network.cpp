#include <vector>

#include "doctest.h"

#include "climadapt/city.hpp"
#include "climadapt/network.hpp"
#include "support/routing_oracle.hpp"

using namespace climadapt;

namespace {

ModeSet modes(std::initializer_list<Mode> ms) {
  ModeSet s;
  for (auto m : ms) s.add(m);
  return s;
}

// 0 -> 1 -> 2 with a bridge 1 -> 2 as the only link between the halves,
// plus a return path 2 -> 0.
TransportNetwork bridge_net() {
  const auto all = modes({Mode::Drive, Mode::Cycle, Mode::Walk});
  std::vector<NetNode> nodes{{0, 0, 0, 0}, {1, 100, 0, 0}, {2, 200, 0, 1}};
  std::vector<NetEdge> edges{{0, 0, 1, 100, all, 36, 1000}, {1, 1, 2, 100, all, 36, 1000}, {2, 2, 0, 200, all, 36, 1000}};
  return TransportNetwork(nodes, edges);
}

}  // namespace

TEST_CASE("disruption speed falls from free flow to zero at the cutoff") {
  CHECK(disrupted_speed(50.0, 0.0, Mode::Drive) == 50.0);
  CHECK(disrupted_speed(50.0, 0.30, Mode::Drive) == 0.0);
  CHECK(disrupted_speed(50.0, 0.45, Mode::Drive) == 0.0);
  const double half = disrupted_speed(50.0, 0.15, Mode::Drive);
  CHECK(half > 0.0);
  CHECK(half < 50.0);
  // 1 - 1.9 * 0.5 - (1 - 1.9) * 0.25 = 0.275
  CHECK(half == doctest::Approx(50.0 * 0.275));
  CHECK(disrupted_speed(16.0, 0.20, Mode::Cycle) == 0.0);
  CHECK(disrupted_speed(5.0, 0.39, Mode::Walk) > 0.0);
  double prev = 60.0;
  for (int i = 0; i <= 40; ++i) {
    const double v = disrupted_speed(60.0, i * 0.01, Mode::Drive);
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("disruption parameters outside the monotone range are rejected") {
  DisruptionParams p;
  CHECK_NOTHROW(p.validate());
  p.linear_coefficient = 2.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  DisruptionParams q;
  q.cutoff_m[1] = 0.0;
  CHECK_THROWS_WITH_AS(q.validate(), "disruption.cutoff_m.cycle: must be a positive depth", ConfigError);
}

TEST_CASE("edge minutes honour mode caps and closures") {
  const NetEdge e{0, 0, 1, 1000.0, modes({Mode::Drive, Mode::Walk}), 60.0, 0.0};
  CHECK(edge_minutes(e, Mode::Drive, 0.0) == doctest::Approx(1.0));
  CHECK(edge_minutes(e, Mode::Walk, 0.0) == doctest::Approx(12.0));
  CHECK(edge_minutes(e, Mode::Cycle, 0.0) == kUnreachable);
  CHECK(edge_minutes(e, Mode::Drive, 0.3) == kUnreachable);
}

TEST_CASE("dry routing gives identical baseline and disrupted times") {
  const auto city = generate_synthetic_city(CitySpec{}, 7);
  const auto out = route_all(city.network, city.trips, {});
  for (const auto& o : out) {
    CHECK_FALSE(o.cancelled);
    CHECK(o.disrupted_minutes == o.baseline_minutes);
    CHECK(o.baseline_minutes > 0.0);
  }
}

TEST_CASE("flooding the only bridge cancels the trip") {
  const auto net = bridge_net();
  TripTable trips{{{0, 0, 2, Mode::Drive, 1.0}, {1, 2, 0, Mode::Walk, 1.0}}};
  const std::vector<double> depth{0.0, 0.35, 0.0};
  const auto out = route_all(net, trips, depth);
  CHECK(out[0].cancelled);
  CHECK(out[0].disrupted_minutes == kUnreachable);
  CHECK_FALSE(out[1].cancelled);
  // Walking tolerates 0.35 m but the bridge is not on its path anyway.
  CHECK(out[1].disrupted_minutes == out[1].baseline_minutes);
}

TEST_CASE("routing matches exhaustive enumeration on small graphs") {
  Rng rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + static_cast<int>(uniform_index(rng, 8));
    const auto net = climadapt::testing::random_small_network(rng, n, 0.35);
    std::vector<double> depth(net.num_edges());
    for (auto& d : depth) d = uniform01(rng) < 0.5 ? 0.0 : uniform01(rng) * 0.45;
    Router router(net);
    for (int o = 0; o < n; ++o) {
      for (auto mode : {Mode::Drive, Mode::Cycle, Mode::Walk}) {
        const auto dist = router.shortest_minutes(o, mode, depth);
        for (int t = 0; t < n; ++t) {
          if (t == o) continue;
          CHECK(dist[static_cast<std::size_t>(t)] == climadapt::testing::brute_force_minutes(net, o, t, mode, depth));
        }
      }
    }
  }
}

TEST_CASE("deeper water never shortens trips or restores cancelled ones") {
  const auto city = generate_synthetic_city(CitySpec{}, 3);
  Rng rng(8);
  std::vector<double> shallow(city.network.num_edges()), deep(city.network.num_edges());
  for (std::size_t i = 0; i < shallow.size(); ++i) {
    shallow[i] = uniform01(rng) < 0.3 ? uniform01(rng) * 0.3 : 0.0;
    deep[i] = shallow[i] + (uniform01(rng) < 0.3 ? uniform01(rng) * 0.2 : 0.0);
  }
  const auto a = route_all(city.network, city.trips, shallow);
  const auto b = route_all(city.network, city.trips, deep);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].disrupted_minutes >= a[i].baseline_minutes);
    CHECK(b[i].disrupted_minutes >= a[i].disrupted_minutes);
    if (a[i].cancelled) CHECK(b[i].cancelled);
  }
}

TEST_CASE("invalid networks and trips are data errors") {
  const auto all = modes({Mode::Drive});
  CHECK_THROWS_AS(TransportNetwork({{0, 0, 0, 0}}, {{0, 0, 1, 10, all, 30, 0}}), DataError);
  CHECK_THROWS_AS(TransportNetwork({{0, 0, 0, 0}, {1, 1, 0, 0}}, {{0, 0, 1, 0.0, all, 30, 0}}), DataError);
  CHECK_THROWS_AS(TransportNetwork({{0, 0, 0, 0}, {1, 1, 0, 0}}, {{0, 0, 1, 5.0, all, -1, 0}}), DataError);
  const auto net = bridge_net();
  CHECK_THROWS_WITH_AS(validate_trips(net, TripTable{{{7, 0, 9, Mode::Drive, 1.0}}}),
                       "trip 7: destination node 9 does not exist", DataError);
  CHECK_THROWS_AS(validate_trips(net, TripTable{{{1, 1, 1, Mode::Drive, 1.0}}}), DataError);
}

TEST_CASE("network and trip files round-trip") {
  const auto city = generate_synthetic_city(CitySpec{}, 11);
  const auto net = parse_network(format_nodes(city.network), format_edges(city.network));
  REQUIRE(net.num_edges() == city.network.num_edges());
  for (std::size_t i = 0; i < net.num_edges(); ++i) {
    CHECK(net.edges()[i].length_m == city.network.edges()[i].length_m);
    CHECK(net.edges()[i].modes == city.network.edges()[i].modes);
  }
  const auto trips = parse_trips(format_trips(city.trips));
  REQUIRE(trips.trips.size() == city.trips.trips.size());
  CHECK(trips.trips[5].mode == city.trips.trips[5].mode);
  CHECK(trips.trips[5].destination == city.trips.trips[5].destination);
}
