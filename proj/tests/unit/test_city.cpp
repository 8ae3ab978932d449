#include <filesystem>
#include <set>

#include "doctest.h"

#include "climadapt/city.hpp"
#include "climadapt/text_io.hpp"

using namespace climadapt;

TEST_CASE("synthetic cities are deterministic under seed") {
  const CitySpec spec{.zones = 4, .width = 16, .height = 16, .trips = 500};
  const auto a = generate_synthetic_city(spec, 7);
  const auto b = generate_synthetic_city(spec, 7);
  CHECK(format_terrain(a.terrain) == format_terrain(b.terrain));
  CHECK(format_edges(a.network) == format_edges(b.network));
  CHECK(format_trips(a.trips) == format_trips(b.trips));
  CHECK(a.adjacency == b.adjacency);
  const auto c = generate_synthetic_city(spec, 8);
  CHECK(format_terrain(a.terrain) != format_terrain(c.terrain));
}

TEST_CASE("a 29-zone city has 29 adjacency nodes") {
  const auto city = generate_synthetic_city(CitySpec{.zones = 29, .width = 32, .height = 32, .trips = 800}, 1);
  CHECK(city.num_zones() == 29);
  std::set<int> seen;
  for (auto [a, b] : city.adjacency) {
    seen.insert(a);
    seen.insert(b);
  }
  CHECK(seen.size() == 29);
}

TEST_CASE("trip endpoints lie in stated zones") {
  const auto city = generate_synthetic_city(CitySpec{}, 5);
  CHECK(city.trips.trips.size() == 500);
  for (const auto& t : city.trips.trips) {
    const int zo = city.network.nodes()[static_cast<std::size_t>(t.origin)].zone;
    const int zd = city.network.nodes()[static_cast<std::size_t>(t.destination)].zone;
    CHECK(zo >= 0);
    CHECK(zo < 4);
    CHECK(zd >= 0);
    CHECK(zd < 4);
  }
}

TEST_CASE("infeasible specs are configuration errors") {
  CHECK_THROWS_AS(generate_synthetic_city(CitySpec{.zones = 0}, 1), ConfigError);
  CHECK_THROWS_AS(generate_synthetic_city(CitySpec{.zones = 1}, 1), ConfigError);
  CHECK_THROWS_AS(generate_synthetic_city(CitySpec{.zones = 4, .width = 1}, 1), ConfigError);
  CHECK_THROWS_AS(generate_synthetic_city(CitySpec{.zones = 100, .width = 8, .height = 8}, 1), ConfigError);
}

TEST_CASE("bundles round-trip through disk") {
  const auto dir = std::filesystem::temp_directory_path() / "climadapt_city_roundtrip";
  std::filesystem::remove_all(dir);
  const auto city = generate_synthetic_city(CitySpec{}, 21);
  const auto files = save_city(city, dir);
  CHECK(files.size() == 6);
  const auto back = load_city(dir);
  CHECK(format_terrain(back.terrain) == format_terrain(city.terrain));
  CHECK(format_nodes(back.network) == format_nodes(city.network));
  CHECK(format_edges(back.network) == format_edges(city.network));
  CHECK(format_trips(back.trips) == format_trips(city.trips));
  CHECK(back.adjacency == city.adjacency);
  CHECK(back.zones.size() == city.zones.size());
  std::filesystem::remove_all(dir);
}

TEST_CASE("zone attributes cover the whole terrain") {
  const auto city = generate_synthetic_city(CitySpec{}, 2);
  const auto attrs = zone_attributes(city);
  double area = 0.0;
  for (const auto& a : attrs) {
    area += a.area_m2;
    CHECK(a.mean_slope >= 0.0);
    CHECK(a.road_length_m > 0.0);
  }
  CHECK(area == doctest::Approx(16 * 16 * 25.0 * 25.0));
}
