#include <vector>

#include "doctest.h"

#include "climadapt/valuation.hpp"

using namespace climadapt;

namespace {

TransportNetwork two_edge_net() {
  ModeSet all;
  all.add(Mode::Drive).add(Mode::Cycle).add(Mode::Walk);
  std::vector<NetNode> nodes{{0, 0, 0, 0}, {1, 10, 0, 1}, {2, 20, 0, 1}};
  std::vector<NetEdge> edges{{0, 0, 1, 100.0, all, 50, 2000.0}, {1, 1, 2, 40.0, all, 50, 500.0}};
  return TransportNetwork(nodes, edges);
}

}  // namespace

TEST_CASE("damage curve interpolates and clamps") {
  const DepthDamageCurve curve({{0.0, 0.0}, {0.5, 0.2}, {1.0, 1.0}});
  CHECK(curve(0.0) == 0.0);
  CHECK(curve(0.25) == doctest::Approx(0.1));
  CHECK(curve(0.75) == doctest::Approx(0.6));
  CHECK(curve(3.0) == 1.0);
  const DepthDamageCurve def;
  double prev = 0.0;
  for (int i = 0; i <= 300; ++i) {
    const double f = def(i * 0.01);
    CHECK(f >= prev);
    CHECK(f <= 1.0);
    prev = f;
  }
  CHECK_THROWS_AS(DepthDamageCurve({{0.0, 0.5}, {1.0, 0.2}}), ConfigError);
  CHECK_THROWS_AS(DepthDamageCurve({{0.1, 0.0}, {1.0, 0.2}}), ConfigError);
}

TEST_CASE("infrastructure damage on a two-edge toy network") {
  const auto net = two_edge_net();
  const DepthDamageCurve curve({{0.0, 0.0}, {0.5, 0.2}, {1.0, 1.0}});
  const std::vector<int> zone{0, 1};
  const std::vector<double> dry{0.0, 0.0};
  for (double v : infrastructure_damage(net, dry, zone, 2, curve)) CHECK(v == 0.0);
  // Edge 0: 0.1 x 2000 x 100 = 20000; edge 1: 1.0 x 500 x 40 = 20000.
  const std::vector<double> depth{0.25, 2.0};
  const auto d = infrastructure_damage(net, depth, zone, 2, curve);
  CHECK(d[0] == doctest::Approx(20000.0));
  CHECK(d[1] == doctest::Approx(20000.0));
}

TEST_CASE("delay and cancellation costs by origin zone") {
  const auto net = two_edge_net();
  TripTable trips{{{0, 0, 1, Mode::Drive, 1.0}, {1, 1, 2, Mode::Walk, 1.0}, {2, 1, 2, Mode::Walk, 2.0}}};
  const std::array<double, kNumModes> vot{100.0, 0.0, 0.0};
  const std::array<double, kNumModes> cancel{0.0, 0.0, 200.0};

  std::vector<TripOutcome> none{{0, 10, 10, false}, {1, 5, 5, false}, {2, 5, 5, false}};
  for (double v : delay_cost(net, trips, none, 2, vot)) CHECK(v == 0.0);
  for (double v : cancellation_cost(net, trips, none, 2, cancel)) CHECK(v == 0.0);

  std::vector<TripOutcome> out{{0, 10, 40, false}, {1, 5, kUnreachable, true}, {2, 5, kUnreachable, true}};
  const auto d = delay_cost(net, trips, out, 2, vot);
  CHECK(d[0] == doctest::Approx(50.0));
  CHECK(d[1] == 0.0);
  const auto c = cancellation_cost(net, trips, out, 2, cancel);
  CHECK(c[0] == 0.0);
  CHECK(c[1] == doctest::Approx(600.0));  // three persons' walk trips at 200
}

TEST_CASE("delay cost equals an independent weighted sum") {
  const auto net = two_edge_net();
  Rng rng(4);
  TripTable trips;
  std::vector<TripOutcome> outs;
  const std::array<double, kNumModes> vot{150.0, 90.0, 70.0};
  const std::array<double, kNumModes> cancel{400.0, 300.0, 200.0};
  double expect_d[2] = {0, 0}, expect_c[2] = {0, 0};
  for (int i = 0; i < 200; ++i) {
    const int origin = static_cast<int>(uniform_index(rng, 3));
    const int dest = (origin + 1) % 3;
    const Mode mode = static_cast<Mode>(uniform_index(rng, 3));
    const double w = 1.0 + static_cast<double>(uniform_index(rng, 5));
    trips.trips.push_back({i, origin, dest, mode, w});
    const bool cancelled = uniform01(rng) < 0.2;
    const double base = 5.0 + 10.0 * uniform01(rng);
    const double dis = cancelled ? kUnreachable : base + 20.0 * uniform01(rng);
    outs.push_back({static_cast<std::size_t>(i), base, dis, cancelled});
    const int z = origin == 0 ? 0 : 1;
    if (cancelled) {
      expect_c[z] += w * cancel[static_cast<std::size_t>(mode)];
    } else {
      expect_d[z] += (dis - base) / 60.0 * vot[static_cast<std::size_t>(mode)] * w;
    }
  }
  const auto d = delay_cost(net, trips, outs, 2, vot);
  const auto c = cancellation_cost(net, trips, outs, 2, cancel);
  for (int z = 0; z < 2; ++z) {
    CHECK(d[static_cast<std::size_t>(z)] == doctest::Approx(expect_d[z]).epsilon(1e-12));
    CHECK(c[static_cast<std::size_t>(z)] == doctest::Approx(expect_c[z]).epsilon(1e-12));
  }
}

TEST_CASE("action costs charge implementation and maintenance") {
  InterventionCatalog cat;
  cat[Kind::Soakaway].implementation_cost_dkk = 1e6;
  cat[Kind::Soakaway].maintenance_cost_dkk_per_year = 1e4;
  const ZoneLedger empty(3);
  const std::vector<Kind> idle(3, Kind::DoNothing);
  const auto none = action_costs(empty, idle, cat);
  for (int z = 0; z < 3; ++z) {
    CHECK(none.investment_dkk[static_cast<std::size_t>(z)] == 0.0);
    CHECK(none.maintenance_dkk[static_cast<std::size_t>(z)] == 0.0);
  }
  const std::vector<Kind> one{Kind::DoNothing, Kind::Soakaway, Kind::DoNothing};
  const auto r = action_costs(empty, one, cat);
  CHECK(r.investment_dkk == std::vector<double>{0.0, 1e6, 0.0});
  CHECK(r.maintenance_dkk == std::vector<double>{0.0, 1e4, 0.0});
  CHECK(r.ledger.is_active(1, Kind::Soakaway));
  CHECK_THROWS_AS(action_costs(r.ledger, one, cat), ContractViolation);

  const auto again = action_costs(r.ledger, idle, cat);
  CHECK(again.investment_dkk[1] == 0.0);
  CHECK(again.maintenance_dkk[1] == 1e4);
}
