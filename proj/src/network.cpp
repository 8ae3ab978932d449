#include "climadapt/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>

#include <fmt/format.h>

#include "climadapt/text_io.hpp"

namespace climadapt {

TransportNetwork::TransportNetwork(std::vector<NetNode> nodes, std::vector<NetEdge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  const int n = static_cast<int>(nodes_.size());
  for (int i = 0; i < n; ++i) {
    if (nodes_[static_cast<std::size_t>(i)].id != i) throw DataError(fmt::format("network: node ids must be 0..{} in order", n - 1));
  }
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    if (e.id != static_cast<int>(i)) throw DataError(fmt::format("network: edge ids must be 0..{} in order", edges_.size() - 1));
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n) {
      throw DataError(fmt::format("network: edge {} references a missing node", e.id));
    }
    if (e.from == e.to) throw DataError(fmt::format("network: edge {} is a self-loop", e.id));
    if (!(e.length_m > 0.0) || !std::isfinite(e.length_m)) throw DataError(fmt::format("network: edge {} length must be > 0", e.id));
    if (!(e.speed_kmh > 0.0) || !std::isfinite(e.speed_kmh)) throw DataError(fmt::format("network: edge {} speed must be > 0", e.id));
    if (!(e.recon_cost_per_m >= 0.0) || !std::isfinite(e.recon_cost_per_m)) {
      throw DataError(fmt::format("network: edge {} reconstruction cost must be >= 0", e.id));
    }
    if (e.modes.empty()) throw DataError(fmt::format("network: edge {} permits no mode", e.id));
  }
  out_offset_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (const auto& e : edges_) ++out_offset_[static_cast<std::size_t>(e.from) + 1];
  for (int i = 0; i < n; ++i) out_offset_[static_cast<std::size_t>(i) + 1] += out_offset_[static_cast<std::size_t>(i)];
  out_edges_.assign(edges_.size(), 0);
  auto fill = out_offset_;
  for (const auto& e : edges_) out_edges_[static_cast<std::size_t>(fill[static_cast<std::size_t>(e.from)]++)] = e.id;
  for (int i = 0; i < n; ++i) {
    auto first = out_edges_.begin() + out_offset_[static_cast<std::size_t>(i)];
    auto last = out_edges_.begin() + out_offset_[static_cast<std::size_t>(i) + 1];
    std::sort(first, last, [&](int a, int b) {
      const auto& ea = edges_[static_cast<std::size_t>(a)];
      const auto& eb = edges_[static_cast<std::size_t>(b)];
      return std::tie(ea.to, ea.id) < std::tie(eb.to, eb.id);
    });
  }
}

std::span<const int> TransportNetwork::out_edges(int node) const {
  const auto lo = static_cast<std::size_t>(out_offset_[static_cast<std::size_t>(node)]);
  const auto hi = static_cast<std::size_t>(out_offset_[static_cast<std::size_t>(node) + 1]);
  return std::span<const int>(out_edges_).subspan(lo, hi - lo);
}

std::vector<Segment> TransportNetwork::segments() const {
  std::vector<Segment> out;
  out.reserve(edges_.size());
  for (const auto& e : edges_) {
    const auto& a = nodes_[static_cast<std::size_t>(e.from)];
    const auto& b = nodes_[static_cast<std::size_t>(e.to)];
    out.push_back({a.x, a.y, b.x, b.y});
  }
  return out;
}

void validate_trips(const TransportNetwork& net, const TripTable& trips) {
  const int n = static_cast<int>(net.num_nodes());
  for (const auto& t : trips.trips) {
    if (t.origin < 0 || t.origin >= n) throw DataError(fmt::format("trip {}: origin node {} does not exist", t.id, t.origin));
    if (t.destination < 0 || t.destination >= n) {
      throw DataError(fmt::format("trip {}: destination node {} does not exist", t.id, t.destination));
    }
    if (t.origin == t.destination) throw DataError(fmt::format("trip {}: origin equals destination", t.id));
    if (!(t.weight > 0.0) || !std::isfinite(t.weight)) throw DataError(fmt::format("trip {}: weight must be > 0", t.id));
    bool permitted = false;
    for (int e : net.out_edges(t.origin)) permitted = permitted || net.edges()[static_cast<std::size_t>(e)].modes.has(t.mode);
    if (!permitted) {
      throw DataError(fmt::format("trip {}: mode {} is not permitted on any edge leaving node {}", t.id, name_of(t.mode),
                                  t.origin));
    }
  }
}

void DisruptionParams::validate() const {
  for (int m = 0; m < kNumModes; ++m) {
    const auto name = kModeNames[static_cast<std::size_t>(m)];
    if (!(cutoff_m[static_cast<std::size_t>(m)] > 0.0) || !std::isfinite(cutoff_m[static_cast<std::size_t>(m)])) {
      throw ConfigError(fmt::format("disruption.cutoff_m.{}: must be a positive depth", name));
    }
    if (!(max_speed_kmh[static_cast<std::size_t>(m)] > 0.0)) {
      throw ConfigError(fmt::format("disruption.max_speed_kmh.{}: must be > 0", name));
    }
  }
  if (!(linear_coefficient >= 0.0 && linear_coefficient <= 2.0)) {
    throw ConfigError("disruption.linear_coefficient: must lie in [0, 2] for speed to fall monotonically");
  }
}

double disrupted_speed(double free_flow_kmh, double depth_m, Mode mode, const DisruptionParams& params) {
  if (depth_m <= 0.0) return free_flow_kmh;
  const double u = depth_m / params.cutoff_m[static_cast<std::size_t>(index_of(mode))];
  if (u >= 1.0) return 0.0;
  const double a = params.linear_coefficient;
  const double factor = 1.0 - a * u - (1.0 - a) * u * u;
  return free_flow_kmh * std::clamp(factor, 0.0, 1.0);
}

double edge_minutes(const NetEdge& edge, Mode mode, double depth_m, const DisruptionParams& params) {
  if (!edge.modes.has(mode)) return kUnreachable;
  const double free_flow = std::min(edge.speed_kmh, params.max_speed_kmh[static_cast<std::size_t>(index_of(mode))]);
  const double v = disrupted_speed(free_flow, depth_m, mode, params);
  if (!(v > 0.0)) return kUnreachable;
  return edge.length_m * 0.06 / v;  // m / (km/h) -> minutes
}

Router::Router(const TransportNetwork& net, DisruptionParams params) : net_(&net), params_(params) {}

std::vector<double> Router::shortest_minutes(int origin, Mode mode, std::span<const double> edge_depth) const {
  const auto& net = *net_;
  if (!edge_depth.empty() && edge_depth.size() != net.num_edges()) {
    throw ShapeError(fmt::format("routing: {} edge depths for {} edges", edge_depth.size(), net.num_edges()));
  }
  std::vector<double> dist(net.num_nodes(), kUnreachable);
  std::vector<char> done(net.num_nodes(), 0);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[static_cast<std::size_t>(origin)] = 0.0;
  queue.push({0.0, origin});
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (done[static_cast<std::size_t>(u)]) continue;
    done[static_cast<std::size_t>(u)] = 1;
    for (int eid : net.out_edges(u)) {
      const auto& e = net.edges()[static_cast<std::size_t>(eid)];
      const double depth = edge_depth.empty() ? 0.0 : edge_depth[static_cast<std::size_t>(eid)];
      const double w = edge_minutes(e, mode, depth, params_);
      if (w == kUnreachable) continue;
      const double nd = d + w;
      if (nd < dist[static_cast<std::size_t>(e.to)]) {
        dist[static_cast<std::size_t>(e.to)] = nd;
        queue.push({nd, e.to});
      }
    }
  }
  return dist;
}

std::vector<double> Router::trip_minutes(const TripTable& trips, std::span<const double> edge_depth) const {
  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;  // (mode, origin) -> trips
  for (std::size_t i = 0; i < trips.trips.size(); ++i) {
    const auto& t = trips.trips[i];
    groups[{index_of(t.mode), t.origin}].push_back(i);
  }
  std::vector<double> out(trips.trips.size(), kUnreachable);
  for (const auto& [key, members] : groups) {
    const auto dist = shortest_minutes(key.second, static_cast<Mode>(key.first), edge_depth);
    for (auto i : members) out[i] = dist[static_cast<std::size_t>(trips.trips[i].destination)];
  }
  return out;
}

std::vector<TripOutcome> route_all(const Router& router, const TripTable& trips, std::span<const double> baseline,
                                   std::span<const double> edge_depth) {
  if (baseline.size() != trips.trips.size()) {
    throw ShapeError(fmt::format("routing: {} baseline times for {} trips", baseline.size(), trips.trips.size()));
  }
  const auto disrupted = edge_depth.empty() ? std::vector<double>(baseline.begin(), baseline.end())
                                            : router.trip_minutes(trips, edge_depth);
  std::vector<TripOutcome> out(trips.trips.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].trip = i;
    out[i].baseline_minutes = baseline[i];
    out[i].disrupted_minutes = disrupted[i];
    out[i].cancelled = disrupted[i] == kUnreachable;
  }
  return out;
}

std::vector<TripOutcome> route_all(const TransportNetwork& net, const TripTable& trips,
                                   std::span<const double> edge_depth, const DisruptionParams& params) {
  validate_trips(net, trips);
  Router router(net, params);
  const auto baseline = router.trip_minutes(trips, {});
  return route_all(router, trips, baseline, edge_depth);
}

std::vector<int> edge_zones(const TransportNetwork& net, const TerrainGrid& grid) {
  std::vector<int> zones(net.num_edges(), kNoZone);
  for (const auto& e : net.edges()) {
    const auto& a = net.nodes()[static_cast<std::size_t>(e.from)];
    const auto& b = net.nodes()[static_cast<std::size_t>(e.to)];
    const long long cell = grid.cell_at(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
    int z = cell >= 0 ? grid.zone_of_cell[static_cast<std::size_t>(cell)] : kNoZone;
    if (z == kNoZone) z = a.zone;
    zones[static_cast<std::size_t>(e.id)] = z;
  }
  return zones;
}

TransportNetwork parse_network(std::string_view nodes_csv, std::string_view edges_csv) {
  const auto nt = parse_csv(nodes_csv, "nodes.csv");
  const auto nid = nt.column("id"), nx = nt.column("x"), ny = nt.column("y"), nz = nt.column("zone");
  std::vector<NetNode> nodes;
  for (std::size_t r = 0; r < nt.rows.size(); ++r) {
    const auto& row = nt.rows[r];
    const auto where = nt.where(r);
    nodes.push_back({static_cast<int>(parse_int(row[nid], where)), parse_double(row[nx], where),
                     parse_double(row[ny], where), static_cast<int>(parse_int(row[nz], where))});
  }
  const auto et = parse_csv(edges_csv, "edges.csv");
  const auto eid = et.column("id"), ef = et.column("from"), eto = et.column("to"), el = et.column("length_m"),
             em = et.column("modes"), es = et.column("speed_kmh"), ec = et.column("recon_cost_per_m");
  std::vector<NetEdge> edges;
  for (std::size_t r = 0; r < et.rows.size(); ++r) {
    const auto& row = et.rows[r];
    const auto where = et.where(r);
    const auto modes = parse_mode_set(row[em]);
    if (!modes) throw DataError(fmt::format("{}: invalid mode set '{}'", where, row[em]));
    edges.push_back({static_cast<int>(parse_int(row[eid], where)), static_cast<int>(parse_int(row[ef], where)),
                     static_cast<int>(parse_int(row[eto], where)), parse_double(row[el], where), *modes,
                     parse_double(row[es], where), parse_double(row[ec], where)});
  }
  return TransportNetwork(std::move(nodes), std::move(edges));
}

TripTable parse_trips(std::string_view trips_csv) {
  const auto t = parse_csv(trips_csv, "trips.csv");
  const auto cid = t.column("id"), co = t.column("origin"), cd = t.column("destination"), cm = t.column("mode"),
             cw = t.column("weight");
  TripTable table;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const auto where = t.where(r);
    const auto mode = parse_mode(row[cm]);
    if (!mode) throw DataError(fmt::format("{}: unknown mode '{}'", where, row[cm]));
    table.trips.push_back({static_cast<int>(parse_int(row[cid], where)), static_cast<int>(parse_int(row[co], where)),
                           static_cast<int>(parse_int(row[cd], where)), *mode, parse_double(row[cw], where)});
  }
  return table;
}

TransportNetwork load_network(const std::filesystem::path& nodes_csv, const std::filesystem::path& edges_csv) {
  return parse_network(read_text_file(nodes_csv), read_text_file(edges_csv));
}

TripTable load_trips(const std::filesystem::path& trips_csv) { return parse_trips(read_text_file(trips_csv)); }

std::string format_nodes(const TransportNetwork& net) {
  std::string out = "id,x,y,zone\n";
  for (const auto& n : net.nodes()) {
    out += fmt::format("{},{},{},{}\n", n.id, format_number(n.x), format_number(n.y), n.zone);
  }
  return out;
}

std::string format_edges(const TransportNetwork& net) {
  std::string out = "id,from,to,length_m,modes,speed_kmh,recon_cost_per_m\n";
  for (const auto& e : net.edges()) {
    out += fmt::format("{},{},{},{},{},{},{}\n", e.id, e.from, e.to, format_number(e.length_m), to_string(e.modes),
                       format_number(e.speed_kmh), format_number(e.recon_cost_per_m));
  }
  return out;
}

std::string format_trips(const TripTable& trips) {
  std::string out = "id,origin,destination,mode,weight\n";
  for (const auto& t : trips.trips) {
    out += fmt::format("{},{},{},{},{}\n", t.id, t.origin, t.destination, name_of(t.mode), format_number(t.weight));
  }
  return out;
}

}  // namespace climadapt
