#pragma once

#include <array>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "climadapt/core.hpp"
#include "climadapt/flood.hpp"
#include "climadapt/terrain.hpp"

namespace climadapt {

struct NetNode {
  int id = 0;
  double x = 0.0;  // m, terrain coordinates
  double y = 0.0;
  int zone = kNoZone;
};

// Directed edge. Two-way streets are two edges.
struct NetEdge {
  int id = 0;
  int from = 0;
  int to = 0;
  double length_m = 0.0;
  ModeSet modes;
  double speed_kmh = 0.0;  // free-flow
  double recon_cost_per_m = 0.0;
};

// Node and edge ids are contiguous from 0 and equal their position.
class TransportNetwork {
 public:
  TransportNetwork() = default;
  // Throws DataError on dangling endpoints, non-positive lengths or speeds,
  // empty mode sets or non-contiguous ids.
  TransportNetwork(std::vector<NetNode> nodes, std::vector<NetEdge> edges);

  const std::vector<NetNode>& nodes() const { return nodes_; }
  const std::vector<NetEdge>& edges() const { return edges_; }
  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  // Outgoing edge ids of a node, ordered by (head node, edge id).
  std::span<const int> out_edges(int node) const;

  // Straight segment per edge for flood sampling.
  std::vector<Segment> segments() const;

 private:
  std::vector<NetNode> nodes_;
  std::vector<NetEdge> edges_;
  std::vector<int> out_offset_;
  std::vector<int> out_edges_;
};

struct Trip {
  int id = 0;
  int origin = 0;
  int destination = 0;
  Mode mode = Mode::Drive;
  double weight = 1.0;  // persons represented
};

struct TripTable {
  std::vector<Trip> trips;
};

// Throws DataError naming the first trip with a missing endpoint,
// origin == destination, non-positive weight or a mode absent from every
// edge leaving the origin.
void validate_trips(const TransportNetwork& net, const TripTable& trips);

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

struct TripOutcome {
  std::size_t trip = 0;  // index into the trip table
  double baseline_minutes = 0.0;
  double disrupted_minutes = 0.0;  // kUnreachable when cancelled
  bool cancelled = false;
};

// Speed reduction under water depth d on an edge:
//   v(d) = v0 * (1 - a*u - (1 - a)*u^2),  u = d / cutoff,
// and 0 from the cutoff on. a in [0, 2] keeps v non-increasing; the default
// follows the quadratic depth-speed curve underlying the 0.3 m drive cutoff.
struct DisruptionParams {
  std::array<double, kNumModes> cutoff_m = {0.30, 0.20, 0.40};
  double linear_coefficient = 1.9;
  // Mode speed caps applied to the edge free-flow speed.
  std::array<double, kNumModes> max_speed_kmh = {std::numeric_limits<double>::infinity(), 16.0, 5.0};

  // Throws ConfigError naming the field.
  void validate() const;
};

double disrupted_speed(double free_flow_kmh, double depth_m, Mode mode, const DisruptionParams& params = {});

// Travel minutes on an edge for a mode, kUnreachable when the edge is closed
// to the mode or impassable at this depth.
double edge_minutes(const NetEdge& edge, Mode mode, double depth_m, const DisruptionParams& params = {});

// Label-setting shortest travel times over one network.
class Router {
 public:
  Router(const TransportNetwork& net, DisruptionParams params = {});

  // Minutes from origin to every node; kUnreachable where no path exists.
  // Empty depth means a dry network.
  std::vector<double> shortest_minutes(int origin, Mode mode, std::span<const double> edge_depth) const;

  // Minutes per trip (kUnreachable when cancelled). Trips sharing an origin
  // and mode share one search.
  std::vector<double> trip_minutes(const TripTable& trips, std::span<const double> edge_depth) const;

  const TransportNetwork& network() const { return *net_; }
  const DisruptionParams& params() const { return params_; }

 private:
  const TransportNetwork* net_;
  DisruptionParams params_;
};

// Routes every trip on the dry network and under edge_depth (empty: dry).
std::vector<TripOutcome> route_all(const TransportNetwork& net, const TripTable& trips,
                                   std::span<const double> edge_depth, const DisruptionParams& params = {});
// Same, reusing precomputed dry-network minutes.
std::vector<TripOutcome> route_all(const Router& router, const TripTable& trips, std::span<const double> baseline,
                                   std::span<const double> edge_depth);

// Zone of each edge: the terrain zone under the edge midpoint, falling back
// to the tail node's zone.
std::vector<int> edge_zones(const TransportNetwork& net, const TerrainGrid& grid);

// Delimited-text IO (see docs/formats.md).
TransportNetwork load_network(const std::filesystem::path& nodes_csv, const std::filesystem::path& edges_csv);
TripTable load_trips(const std::filesystem::path& trips_csv);
std::string format_nodes(const TransportNetwork& net);
std::string format_edges(const TransportNetwork& net);
std::string format_trips(const TripTable& trips);
TransportNetwork parse_network(std::string_view nodes_csv, std::string_view edges_csv);
TripTable parse_trips(std::string_view trips_csv);

}  // namespace climadapt
