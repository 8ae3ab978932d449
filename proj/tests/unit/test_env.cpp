#include <cmath>
#include <memory>
#include <vector>

#include "doctest.h"

#include "climadapt/env.hpp"
#include "support/toy_city.hpp"

using namespace climadapt;

namespace {

std::shared_ptr<const CityModel> small_model(std::uint64_t seed = 7) {
  return std::make_shared<const CityModel>(generate_synthetic_city(CitySpec{}, seed), EnvConfig{});
}

std::vector<Kind> idle(int z) { return std::vector<Kind>(static_cast<std::size_t>(z), Kind::DoNothing); }

}  // namespace

TEST_CASE("reset is deterministic and starts clean") {
  Environment a(small_model()), b(small_model());
  const auto sa = a.reset(Scenario::Rcp45, 3);
  const auto sb = b.reset(Scenario::Rcp45, 3);
  CHECK(sa == sb);
  CHECK(sa.step == 0);
  for (double f : sa.features) CHECK(f == 0.0);
  for (int z = 0; z < sa.num_zones; ++z) {
    CHECK(sa.allowed(z, Kind::DoNothing));
    for (int k = 1; k < kNumKinds; ++k) {
      CHECK(sa.allowed(z, kind_at(k)) == a.model().applicable(z, kind_at(k)));
    }
  }
}

TEST_CASE("episodes last 77 steps and rewards decompose exactly") {
  Environment env(small_model());
  env.reset(Scenario::Rcp85, 1);
  CHECK(env.model().horizon_steps() == 77);
  int steps = 0;
  Rng rng(5);
  while (!env.done()) {
    std::vector<Kind> act = idle(env.num_zones());
    for (int z = 0; z < env.num_zones(); ++z) {
      const Kind k = kind_at(static_cast<int>(uniform_index(rng, kNumKinds)));
      if (env.state().allowed(z, k) && uniform01(rng) < 0.2) act[static_cast<std::size_t>(z)] = k;
    }
    const auto r = env.step(act);
    double sum = 0.0;
    for (const auto& c : r.costs.zones) {
      CHECK(c.impact_dkk >= 0.0);
      CHECK(c.delay_dkk >= 0.0);
      CHECK(c.cancellation_dkk >= 0.0);
      sum += c.total();
    }
    CHECK(std::abs(r.reward + sum) <= 1e-9 * std::max(1.0, sum));
    CHECK(r.event.year == 2024 + steps);
    ++steps;
  }
  CHECK(steps == 77);
  CHECK_THROWS(env.step(idle(env.num_zones())));
}

TEST_CASE("zero rainfall and no action yield zero reward") {
  Environment env(climadapt::testing::toy_model(0.0));
  env.reset(Scenario::Rcp26, 0);
  const auto r = env.step(idle(1));
  CHECK(r.reward == 0.0);
}

TEST_CASE("masked actions are rejected before any state change") {
  Environment env(climadapt::testing::toy_model(50.0));
  env.reset(Scenario::Rcp45, 0);
  env.step(std::vector<Kind>{Kind::Soakaway});
  const auto before = env.state();
  const auto ledger = env.ledger();
  CHECK_THROWS_WITH_AS(env.step(std::vector<Kind>{Kind::Soakaway}), "zone 0: action Soakaway is masked",
                       ContractViolation);
  CHECK(env.state() == before);
  CHECK(env.ledger() == ledger);
  CHECK_THROWS_AS(env.step(std::vector<Kind>{}), ContractViolation);
}

TEST_CASE("scripted toy episode matches hand simulation") {
  // 50 mm over 16 cells of 100 m2 is 5 m3 per cell; the four interior cells
  // drain into the pit, the rest leave the raster. The 30 m edge at 36 km/h
  // takes 0.05 min dry. VoT 600 DKK/h = 10 DKK/min. Damage uses the default
  // curve at 1000 DKK/m.
  Environment env(climadapt::testing::toy_model(50.0));
  env.reset(Scenario::Rcp45, 0);
  auto factor = [](double depth) {
    const double u = depth / 0.3;
    return 1.0 - 1.9 * u + 0.9 * u * u;
  };

  // t=0: no action, pit holds 20 m3 -> 0.2 m.
  auto r0 = env.step(std::vector<Kind>{Kind::DoNothing});
  const double dmg0 = (0.10 + (0.2 - 0.15) / 0.15 * 0.15) * 1000.0 * 30.0;
  const double delay0 = (0.05 / factor(0.2) - 0.05) * 10.0;
  CHECK(r0.costs.zones[0].impact_dkk == doctest::Approx(dmg0).epsilon(1e-9));
  CHECK(r0.costs.zones[0].delay_dkk == doctest::Approx(delay0).epsilon(1e-9));
  CHECK(r0.costs.zones[0].cancellation_dkk == 0.0);
  CHECK(r0.reward == doctest::Approx(-(dmg0 + delay0)).epsilon(1e-12));
  CHECK(env.state().feature(0, 0) == r0.costs.zones[0].impact_dkk);
  CHECK(env.state().feature(0, 1) == r0.costs.zones[0].delay_dkk);

  // t=1: soakaway removes 40 m3 of the zone's 80 m3 -> pit 10 m3 -> 0.1 m.
  auto r1 = env.step(std::vector<Kind>{Kind::Soakaway});
  const double dmg1 = (0.02 + (0.1 - 0.05) / 0.1 * 0.08) * 1000.0 * 30.0;
  const double delay1 = (0.05 / factor(0.1) - 0.05) * 10.0;
  CHECK(r1.costs.zones[0].investment_dkk == 1000.0);
  CHECK(r1.costs.zones[0].maintenance_dkk == 100.0);
  CHECK(r1.costs.zones[0].impact_dkk == doctest::Approx(dmg1).epsilon(1e-9));
  CHECK(r1.costs.zones[0].delay_dkk == doctest::Approx(delay1).epsilon(1e-9));
  CHECK(r1.reward == doctest::Approx(-(dmg1 + delay1 + 1100.0)).epsilon(1e-12));
  CHECK(env.state().feature(0, 3 + 1) == doctest::Approx(0.75));  // Soakaway slot after one year
  CHECK_FALSE(env.state().allowed(0, Kind::Soakaway));

  // t=2: effectiveness 0.75 -> 30 m3 removed -> pit 12.5 m3 -> 0.125 m.
  auto r2 = env.step(std::vector<Kind>{Kind::DoNothing});
  const double dmg2 = (0.02 + (0.125 - 0.05) / 0.1 * 0.08) * 1000.0 * 30.0;
  const double delay2 = (0.05 / factor(0.125) - 0.05) * 10.0;
  CHECK(r2.costs.zones[0].investment_dkk == 0.0);
  CHECK(r2.costs.zones[0].maintenance_dkk == 100.0);
  CHECK(r2.costs.zones[0].impact_dkk == doctest::Approx(dmg2).epsilon(1e-9));
  CHECK(r2.costs.zones[0].delay_dkk == doctest::Approx(delay2).epsilon(1e-9));
  CHECK(env.state().feature(0, 4) == doctest::Approx(0.5));

  // Lifetime 4: active through t=4, selectable again at t=5.
  env.step(std::vector<Kind>{Kind::DoNothing});
  CHECK_FALSE(env.state().allowed(0, Kind::Soakaway));
  env.step(std::vector<Kind>{Kind::DoNothing});
  CHECK(env.state().allowed(0, Kind::Soakaway));
  CHECK(env.state().feature(0, 4) == 0.0);
}

TEST_CASE("deep water cancels the toy trip") {
  // 150 mm -> 15 m3 per cell -> pit 60 m3 -> 0.6 m, beyond the drive cutoff.
  Environment env(climadapt::testing::toy_model(150.0));
  env.reset(Scenario::Rcp45, 0);
  const auto r = env.step(std::vector<Kind>{Kind::DoNothing});
  CHECK(r.costs.zones[0].cancellation_dkk == doctest::Approx(500.0));
  CHECK(r.costs.zones[0].delay_dkk == 0.0);
}

TEST_CASE("equal seeds and actions reproduce the trajectory") {
  auto run = [](std::uint64_t seed) {
    Environment env(small_model());
    env.reset(Scenario::Rcp85, seed);
    std::vector<double> rewards;
    while (!env.done()) rewards.push_back(env.step(idle(env.num_zones())).reward);
    return rewards;
  };
  CHECK(run(9) == run(9));
  CHECK(run(9) != run(10));
}

TEST_CASE("no-control episodes never spend on adaptation") {
  Environment env(small_model());
  env.reset(Scenario::Rcp45, 2);
  while (!env.done()) {
    const auto r = env.step(idle(env.num_zones()));
    for (const auto& c : r.costs.zones) {
      CHECK(c.investment_dkk == 0.0);
      CHECK(c.maintenance_dkk == 0.0);
    }
  }
}

TEST_CASE("resampled demand differs by seed but is reproducible") {
  EnvConfig cfg;
  cfg.resample_trips_on_reset = true;
  auto model = std::make_shared<const CityModel>(generate_synthetic_city(CitySpec{}, 4), cfg);
  Environment a(model), b(model);
  a.reset(Scenario::Rcp45, 1);
  b.reset(Scenario::Rcp45, 1);
  CHECK(format_trips(a.trips()) == format_trips(b.trips()));
  b.reset(Scenario::Rcp45, 2);
  CHECK(format_trips(a.trips()) != format_trips(b.trips()));
}
