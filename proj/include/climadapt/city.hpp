#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "climadapt/interventions.hpp"
#include "climadapt/network.hpp"
#include "climadapt/terrain.hpp"

namespace climadapt {

struct ZoneInfo {
  int id = 0;
  double green_fraction = 0.0;
};

using ZoneEdge = std::pair<int, int>;  // undirected, first < second

// Everything the environment needs about one city.
struct CityBundle {
  TerrainGrid terrain;
  TransportNetwork network;
  TripTable trips;
  std::vector<ZoneInfo> zones;  // ids 0..Z-1 in order
  std::vector<ZoneEdge> adjacency;

  int num_zones() const { return static_cast<int>(zones.size()); }
};

// Throws DataError on inconsistent ids or trips.
void validate(const CityBundle& city);

// Zones sharing at least one cell edge, sorted.
std::vector<ZoneEdge> zone_adjacency(const TerrainGrid& grid);

// Attributes consulted by applicability rules: area and mean slope from the
// terrain, green share from the zone table, drivable length from edges whose
// midpoint lies in the zone.
std::vector<ZoneAttributes> zone_attributes(const CityBundle& city);

struct CitySpec {
  int zones = 4;
  int width = 16;
  int height = 16;
  double cell_size_m = 25.0;
  int trips = 500;
  int street_stride = 2;   // cells between parallel streets
  int depressions = 6;     // random terrain hollows
  double relief_m = 2.0;   // amplitude of hollows and mounds
  double trip_weight = 1.0;

  // Throws ConfigError naming the field.
  void validate() const;
};

// Deterministic under seed: bumpy terrain with hollows, a street lattice with
// alternating one-way rows plus two-way diagonal paths for cycling and
// walking, Voronoi zones seeded at distinct street nodes, and gravity-model
// trips.
CityBundle generate_synthetic_city(const CitySpec& spec, std::uint64_t seed);

// Gravity-model demand: origin zones weighted by node count, destinations by
// node count over squared centroid distance, endpoints uniform among the
// zone's nodes, modes drive/cycle/walk at 0.45/0.35/0.20.
TripTable sample_trips(const TransportNetwork& net, int num_zones, int count, double weight, Rng& rng);

// Bundle directory: terrain.txt, nodes.csv, edges.csv, trips.csv, zones.csv,
// zone_adjacency.csv. save_city returns the written paths.
std::vector<std::filesystem::path> save_city(const CityBundle& city, const std::filesystem::path& dir);
CityBundle load_city(const std::filesystem::path& dir);

}  // namespace climadapt
