#include <numeric>
#include <vector>

#include "doctest.h"

#include "climadapt/flood.hpp"
#include "support/flood_checks.hpp"

using namespace climadapt;
using climadapt::testing::check_equilibrium;
using climadapt::testing::random_terrain;

namespace {

TerrainGrid flat(int w, int h, double elev, double cell = 1.0) {
  TerrainGrid g;
  g.width = w;
  g.height = h;
  g.cell_size_m = cell;
  g.elevation.assign(g.size(), elev);
  g.zone_of_cell.assign(g.size(), 0);
  return g;
}

// Two pits of different depth separated by a low saddle inside a rim.
TerrainGrid twin_pits() {
  TerrainGrid g = flat(7, 3, 5.0);
  const double row[7] = {5, 1, 2, 3, 2, 0, 5};
  for (int c = 0; c < 7; ++c) g.elevation[g.index(1, c)] = row[c];
  return g;
}

}  // namespace

TEST_CASE("no inflow leaves the terrain dry") {
  Rng rng(1);
  const auto g = random_terrain(rng, 12, 9, 3);
  DepressionModel model(g);
  const std::vector<double> zero(3, 0.0);
  const auto r = model.fill_zones(zero);
  for (double d : r.cell_depth) CHECK(d == 0.0);
  CHECK(r.ponded_m3 == 0.0);
  CHECK(r.boundary_outflow_m3 == 0.0);
}

TEST_CASE("a single-cell pit swallows exactly its own volume") {
  auto g = flat(5, 5, 10.0, 2.0);
  const auto pit = g.index(2, 2);
  g.elevation[pit] = 9.0;
  std::fill(g.zone_of_cell.begin(), g.zone_of_cell.end(), kNoZone);
  g.zone_of_cell[pit] = 0;
  DepressionModel model(g);
  const std::vector<double> inflow{4.0};  // 1 m x 4 m2
  const auto r = model.fill_zones(inflow);
  CHECK(r.cell_depth[pit] == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i != pit) CHECK(r.cell_depth[i] == 0.0);
  }
  CHECK(r.boundary_outflow_m3 == doctest::Approx(0.0));
}

TEST_CASE("overflow from a full pit spills across the saddle") {
  const auto g = twin_pits();
  DepressionModel model(g);
  // The left basin (1 2 3) holds 3 m3 below its saddle at 3; the excess
  // lands in the right basin (2 0) and ponds in its lowest cell.
  std::vector<double> cells(g.size(), 0.0);
  cells[g.index(1, 1)] = 4.0;
  const auto r = model.fill(cells);
  CHECK(r.cell_depth[g.index(1, 1)] == doctest::Approx(2.0));
  CHECK(r.cell_depth[g.index(1, 2)] == doctest::Approx(1.0));
  CHECK(r.cell_depth[g.index(1, 3)] == 0.0);
  CHECK(r.cell_depth[g.index(1, 5)] == doctest::Approx(1.0));
  CHECK(r.cell_depth[g.index(1, 4)] == 0.0);
  CHECK(r.boundary_outflow_m3 == doctest::Approx(0.0));
}

TEST_CASE("merged depressions form one level lake") {
  const auto g = twin_pits();
  DepressionModel model(g);
  std::vector<double> cells(g.size(), 0.0);
  cells[g.index(1, 1)] = 10.0;
  const auto r = model.fill(cells);
  // Interior row elevations 1 2 3 2 0 with 10 m3 -> level (10 + 8) / 5 = 3.6.
  for (int c = 1; c <= 5; ++c) {
    CHECK(g.elevation[g.index(1, c)] + r.cell_depth[g.index(1, c)] == doctest::Approx(3.6));
  }
  CHECK(r.boundary_outflow_m3 == 0.0);
  CHECK(r.ponded_m3 == doctest::Approx(10.0));
}

TEST_CASE("water on the raster edge leaves the domain") {
  const auto g = flat(4, 4, 1.0);
  DepressionModel model(g);
  const std::vector<double> inflow{16.0};
  const auto r = model.fill_zones(inflow);
  CHECK(r.ponded_m3 == 0.0);
  CHECK(r.boundary_outflow_m3 == doctest::Approx(16.0));
}

TEST_CASE("closed boundary ponds flat terrain uniformly") {
  const auto g = flat(6, 4, 2.0, 3.0);
  DepressionModel model(g, BoundaryMode::Closed);
  const std::vector<double> inflow{24 * 9 * 0.1};
  const auto r = model.fill_zones(inflow);
  for (double d : r.cell_depth) CHECK(d == doctest::Approx(0.1));
  CHECK(r.boundary_outflow_m3 == 0.0);
}

TEST_CASE("no-data cells act as outlets in open mode") {
  auto g = flat(5, 5, 10.0);
  g.elevation[g.index(2, 2)] = 9.0;
  g.elevation[g.index(2, 3)] = g.nodata;
  g.zone_of_cell[g.index(2, 3)] = kNoZone;
  DepressionModel model(g);
  std::vector<double> cells(g.size(), 0.0);
  cells[g.index(2, 2)] = 1.0;
  const auto r = model.fill(cells);
  CHECK(r.cell_depth[g.index(2, 2)] == 0.0);
  CHECK(r.boundary_outflow_m3 == doctest::Approx(1.0));
}

TEST_CASE("random terrains satisfy mass balance and equilibrium") {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const int w = 4 + static_cast<int>(uniform_index(rng, 14));
    const int h = 4 + static_cast<int>(uniform_index(rng, 14));
    const auto mode = trial % 3 == 0 ? BoundaryMode::Closed : BoundaryMode::Open;
    const auto g = random_terrain(rng, w, h, 3, 3.0, trial % 4 == 1 ? 0.08 : 0.0);
    DepressionModel model(g, mode);
    std::vector<double> cells(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!g.is_nodata(i)) cells[i] = uniform01(rng) * 2.0 * g.cell_area();
    }
    const auto r = model.fill(cells);
    const auto rep = check_equilibrium(g, r, mode);
    CAPTURE(trial);
    CHECK(rep.mass_error <= 1e-9);
    CHECK(rep.level_error <= 1e-9);
    CHECK(rep.descent_error <= 1e-9);
    CHECK_FALSE(rep.wet_outlet);
  }
}

TEST_CASE("depths grow with rainfall and shrink with interventions") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = random_terrain(rng, 16, 16, 4, 4.0);
    DepressionModel model(g);
    ElementSampler sampler(g, std::vector<Segment>{{0.5, 0.5, 10.0, 10.0}});
    InterventionCatalog catalog;
    ZoneLedger small(4), large(4);
    large.deploy(1, Kind::StorageTank, catalog[Kind::StorageTank]);
    const double scale = g.cell_area();
    const RainfallEvent light{0, 2024, 20.0 * scale / 10.0};
    const RainfallEvent heavy{0, 2024, 60.0 * scale / 10.0};
    const auto a = compute_flood(light, model, sampler, small, catalog);
    const auto b = compute_flood(heavy, model, sampler, small, catalog);
    const auto c = compute_flood(heavy, model, sampler, large, catalog);
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(a.cell_depth[i] <= b.cell_depth[i] + 1e-12);
      CHECK(c.cell_depth[i] <= b.cell_depth[i] + 1e-12);
    }
  }
}

TEST_CASE("zone inflow subtracts effective capacity and clamps at zero") {
  auto g = flat(10, 10, 0.0, 100.0);  // 1 km2, one zone
  DepressionModel model(g);
  InterventionCatalog catalog;
  ZoneLedger ledger(1);
  const RainfallEvent ten{0, 2024, 10.0};
  CHECK(zone_inflows(ten, model, ledger, catalog)[0] == doctest::Approx(10000.0));
  ledger.deploy(0, Kind::StorageTank, catalog[Kind::StorageTank]);
  CHECK(zone_inflows(ten, model, ledger, catalog)[0] == doctest::Approx(8500.0));
  const RainfallEvent tiny{0, 2024, 1.0};
  CHECK(zone_inflows(tiny, model, ledger, catalog)[0] == 0.0);
}

TEST_CASE("element depth is the maximum or mean of crossed cells") {
  auto g = flat(4, 1, 0.0, 1.0);
  g.height = 2;
  g.elevation.assign(8, 0.0);
  g.zone_of_cell.assign(8, 0);
  ElementSampler sampler(g, std::vector<Segment>{{0.5, 0.5, 3.5, 0.5}});
  REQUIRE(sampler.cells(0).size() == 4);
  const std::vector<double> depth{0.1, 0.4, 0.0, 0.3, 9, 9, 9, 9};
  CHECK(sampler.sample(depth, ElementDepthMode::Max)[0] == doctest::Approx(0.4));
  CHECK(sampler.sample(depth, ElementDepthMode::Mean)[0] == doctest::Approx(0.2));
}

TEST_CASE("basin labels cover every data cell") {
  Rng rng(11);
  const auto g = random_terrain(rng, 20, 13, 2, 5.0, 0.05);
  DepressionModel model(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.is_nodata(i)) {
      CHECK(model.basin_of_cell()[i] == -1);
    } else {
      CHECK(model.basin_of_cell()[i] >= 0);
    }
  }
}
