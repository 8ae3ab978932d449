#include "climadapt/city.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "climadapt/text_io.hpp"

namespace climadapt {

void validate(const CityBundle& city) {
  validate(city.terrain);
  const int z = city.num_zones();
  if (z < 1) throw DataError("city: no zones");
  for (int i = 0; i < z; ++i) {
    const auto& info = city.zones[static_cast<std::size_t>(i)];
    if (info.id != i) throw DataError(fmt::format("zones.csv: ids must be 0..{} in order", z - 1));
    if (!(info.green_fraction >= 0.0 && info.green_fraction <= 1.0)) {
      throw DataError(fmt::format("zones.csv: zone {} green_fraction must lie in [0, 1]", i));
    }
  }
  if (city.terrain.zone_count() > z) {
    throw DataError(fmt::format("terrain references zone {} but only {} zones exist", city.terrain.zone_count() - 1, z));
  }
  for (const auto& n : city.network.nodes()) {
    if (n.zone < kNoZone || n.zone >= z) throw DataError(fmt::format("nodes.csv: node {} has unknown zone {}", n.id, n.zone));
  }
  for (const auto& [a, b] : city.adjacency) {
    if (a < 0 || b < 0 || a >= z || b >= z || a == b) {
      throw DataError(fmt::format("zone_adjacency.csv: invalid pair ({}, {})", a, b));
    }
  }
  validate_trips(city.network, city.trips);
}

std::vector<ZoneEdge> zone_adjacency(const TerrainGrid& grid) {
  std::set<ZoneEdge> pairs;
  auto add = [&](std::size_t i, std::size_t j) {
    const int a = grid.zone_of_cell[i];
    const int b = grid.zone_of_cell[j];
    if (a == kNoZone || b == kNoZone || a == b) return;
    pairs.insert({std::min(a, b), std::max(a, b)});
  };
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c) {
      if (c + 1 < grid.width) add(grid.index(r, c), grid.index(r, c + 1));
      if (r + 1 < grid.height) add(grid.index(r, c), grid.index(r + 1, c));
    }
  }
  return {pairs.begin(), pairs.end()};
}

std::vector<ZoneAttributes> zone_attributes(const CityBundle& city) {
  const auto& g = city.terrain;
  const auto z = static_cast<std::size_t>(city.num_zones());
  std::vector<ZoneAttributes> out(z);
  std::vector<double> slope_sum(z, 0.0);
  std::vector<double> slope_n(z, 0.0);
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      const auto i = g.index(r, c);
      const int zone = g.zone_of_cell[i];
      if (zone == kNoZone) continue;
      out[static_cast<std::size_t>(zone)].area_m2 += g.cell_area();
      // Mean absolute gradient towards right and lower neighbours.
      for (auto j : {c + 1 < g.width ? g.index(r, c + 1) : i, r + 1 < g.height ? g.index(r + 1, c) : i}) {
        if (j == i || g.is_nodata(j)) continue;
        slope_sum[static_cast<std::size_t>(zone)] += std::abs(g.elevation[j] - g.elevation[i]) / g.cell_size_m;
        slope_n[static_cast<std::size_t>(zone)] += 1.0;
      }
    }
  }
  const auto ez = edge_zones(city.network, g);
  for (const auto& e : city.network.edges()) {
    const int zone = ez[static_cast<std::size_t>(e.id)];
    if (zone != kNoZone && e.modes.has(Mode::Drive)) out[static_cast<std::size_t>(zone)].road_length_m += e.length_m;
  }
  for (std::size_t i = 0; i < z; ++i) {
    out[i].green_fraction = city.zones[i].green_fraction;
    out[i].mean_slope = slope_n[i] > 0.0 ? slope_sum[i] / slope_n[i] : 0.0;
  }
  return out;
}

void CitySpec::validate() const {
  if (zones < 2) throw ConfigError("city.zones: at least 2 zones are required");
  if (width < 2 || height < 2) throw ConfigError("city.width/height: terrain must be at least 2x2 cells");
  if (!(cell_size_m > 0.0)) throw ConfigError("city.cell_size_m: must be > 0");
  if (trips < 1) throw ConfigError("city.trips: must be >= 1");
  if (street_stride < 1) throw ConfigError("city.street_stride: must be >= 1");
  if (depressions < 0) throw ConfigError("city.depressions: must be >= 0");
  if (!(relief_m >= 0.0)) throw ConfigError("city.relief_m: must be >= 0");
  if (!(trip_weight > 0.0)) throw ConfigError("city.trip_weight: must be > 0");
  const int cols = (width - 1) / street_stride + 1;
  const int rows = (height - 1) / street_stride + 1;
  if (cols < 2 || rows < 2) throw ConfigError("city.street_stride: too coarse for the terrain size");
  if (zones > cols * rows) {
    throw ConfigError(fmt::format("city.zones: {} zones need at least as many street nodes ({} available)", zones,
                                  cols * rows));
  }
}

TripTable sample_trips(const TransportNetwork& net, int num_zones, int count, double weight, Rng& rng) {
  const auto z = static_cast<std::size_t>(num_zones);
  std::vector<std::vector<int>> members(z);
  std::vector<double> cx(z, 0.0), cy(z, 0.0);
  for (const auto& n : net.nodes()) {
    if (n.zone == kNoZone) continue;
    members[static_cast<std::size_t>(n.zone)].push_back(n.id);
    cx[static_cast<std::size_t>(n.zone)] += n.x;
    cy[static_cast<std::size_t>(n.zone)] += n.y;
  }
  double scale = 0.0;
  for (std::size_t i = 0; i < z; ++i) {
    if (members[i].empty()) continue;
    cx[i] /= static_cast<double>(members[i].size());
    cy[i] /= static_cast<double>(members[i].size());
  }
  for (const auto& e : net.edges()) scale = std::max(scale, e.length_m);

  auto pick = [&](const std::vector<double>& w) {
    double total = 0.0;
    for (double v : w) total += v;
    double u = uniform01(rng) * total;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (u < w[i]) return i;
      u -= w[i];
    }
    for (std::size_t i = w.size(); i-- > 0;) {
      if (w[i] > 0.0) return i;
    }
    return std::size_t{0};
  };

  std::vector<double> origin_w(z);
  for (std::size_t i = 0; i < z; ++i) origin_w[i] = static_cast<double>(members[i].size());
  static constexpr double kModeShare[kNumModes] = {0.45, 0.35, 0.20};

  TripTable table;
  table.trips.reserve(static_cast<std::size_t>(count));
  while (static_cast<int>(table.trips.size()) < count) {
    const auto zo = pick(origin_w);
    std::vector<double> dest_w(z);
    for (std::size_t j = 0; j < z; ++j) {
      const double d = std::hypot(cx[j] - cx[zo], cy[j] - cy[zo]) / std::max(scale, 1e-9);
      dest_w[j] = static_cast<double>(members[j].size()) / ((1.0 + d) * (1.0 + d));
    }
    const auto zd = pick(dest_w);
    const int o = members[zo][uniform_index(rng, members[zo].size())];
    const int d = members[zd][uniform_index(rng, members[zd].size())];
    const double um = uniform01(rng);
    const Mode mode = um < kModeShare[0] ? Mode::Drive : (um < kModeShare[0] + kModeShare[1] ? Mode::Cycle : Mode::Walk);
    if (o == d) continue;
    bool permitted = false;
    for (int e : net.out_edges(o)) permitted = permitted || net.edges()[static_cast<std::size_t>(e)].modes.has(mode);
    if (!permitted) continue;
    table.trips.push_back({static_cast<int>(table.trips.size()), o, d, mode, weight});
  }
  return table;
}

CityBundle generate_synthetic_city(const CitySpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(derive_seed(seed, 0xC17));
  CityBundle city;
  auto& g = city.terrain;
  g.width = spec.width;
  g.height = spec.height;
  g.cell_size_m = spec.cell_size_m;
  g.elevation.assign(g.size(), 0.0);
  g.zone_of_cell.assign(g.size(), 0);

  // Gentle tilted plane plus Gaussian hollows and mounds.
  const double tilt_x = (uniform01(rng) - 0.5) * 0.02;
  const double tilt_y = (uniform01(rng) - 0.5) * 0.02;
  struct Bump {
    double x, y, sigma, amplitude;
  };
  std::vector<Bump> bumps;
  const double w_m = spec.width * spec.cell_size_m;
  const double h_m = spec.height * spec.cell_size_m;
  const int mounds = std::max(1, spec.depressions / 2);
  for (int k = 0; k < spec.depressions + mounds; ++k) {
    const double sign = k < spec.depressions ? -1.0 : 1.0;
    const double sigma = (0.06 + 0.10 * uniform01(rng)) * std::min(w_m, h_m);
    bumps.push_back({uniform01(rng) * w_m, uniform01(rng) * h_m, sigma,
                     sign * spec.relief_m * (0.5 + 0.5 * uniform01(rng))});
  }
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      const double x = (c + 0.5) * g.cell_size_m;
      const double y = (r + 0.5) * g.cell_size_m;
      double e = 10.0 + tilt_x * x + tilt_y * y;
      for (const auto& b : bumps) {
        const double d2 = (x - b.x) * (x - b.x) + (y - b.y) * (y - b.y);
        e += b.amplitude * std::exp(-0.5 * d2 / (b.sigma * b.sigma));
      }
      // Millimetre resolution keeps files compact.
      g.elevation[g.index(r, c)] = std::round(e * 1000.0) / 1000.0;
    }
  }

  // Street lattice on cell centres.
  const int stride = spec.street_stride;
  const int cols = (spec.width - 1) / stride + 1;
  const int rows = (spec.height - 1) / stride + 1;
  std::vector<NetNode> nodes;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      nodes.push_back({i * cols + j, (j * stride + 0.5) * g.cell_size_m, (i * stride + 0.5) * g.cell_size_m, kNoZone});
    }
  }

  // Voronoi zones around distinct seed nodes.
  std::vector<int> order(nodes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  std::vector<std::pair<double, double>> seeds;
  for (int k = 0; k < spec.zones; ++k) {
    const auto& n = nodes[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
    seeds.push_back({n.x, n.y});
  }
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      const double x = (c + 0.5) * g.cell_size_m;
      const double y = (r + 0.5) * g.cell_size_m;
      int best = 0;
      double best_d = kUnreachable;
      for (int k = 0; k < spec.zones; ++k) {
        const double d = std::hypot(x - seeds[static_cast<std::size_t>(k)].first, y - seeds[static_cast<std::size_t>(k)].second);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      g.zone_of_cell[g.index(r, c)] = best;
    }
  }
  for (auto& n : nodes) n.zone = g.zone_of_cell[static_cast<std::size_t>(g.cell_at(n.x, n.y))];

  std::vector<NetEdge> edges;
  auto add_edge = [&](int a, int b, ModeSet modes, double speed, double cost) {
    const auto& na = nodes[static_cast<std::size_t>(a)];
    const auto& nb = nodes[static_cast<std::size_t>(b)];
    const double len = std::hypot(nb.x - na.x, nb.y - na.y);
    edges.push_back({static_cast<int>(edges.size()), a, b, len, modes, speed, cost});
  };
  const ModeSet all = ModeSet{}.add(Mode::Drive).add(Mode::Cycle).add(Mode::Walk);
  const ModeSet soft = ModeSet{}.add(Mode::Cycle).add(Mode::Walk);
  constexpr double kStreetCost = 12000.0;  // DKK per m
  constexpr double kPathCost = 3000.0;
  for (int i = 0; i < rows; ++i) {
    // Main streets every fourth line carry 50 km/h, the rest 30 km/h.
    const double row_speed = i % 4 == 0 ? 50.0 : 30.0;
    for (int j = 0; j + 1 < cols; ++j) {
      const int a = i * cols + j;
      const int b = a + 1;
      if (i % 2 == 1) {
        // One-way for cars, alternating direction by row.
        const bool east = (i / 2) % 2 == 0;
        add_edge(east ? a : b, east ? b : a, all, row_speed, kStreetCost);
        add_edge(east ? b : a, east ? a : b, soft, row_speed, kStreetCost);
      } else {
        add_edge(a, b, all, row_speed, kStreetCost);
        add_edge(b, a, all, row_speed, kStreetCost);
      }
    }
  }
  for (int j = 0; j < cols; ++j) {
    const double col_speed = j % 4 == 0 ? 50.0 : 30.0;
    for (int i = 0; i + 1 < rows; ++i) {
      const int a = i * cols + j;
      const int b = a + cols;
      add_edge(a, b, all, col_speed, kStreetCost);
      add_edge(b, a, all, col_speed, kStreetCost);
    }
  }
  for (int i = 0; i + 1 < rows; ++i) {
    for (int j = 0; j + 1 < cols; ++j) {
      const int a = i * cols + j;
      for (auto [p, q] : {std::pair{a, a + cols + 1}, std::pair{a + 1, a + cols}}) {
        add_edge(p, q, soft, 20.0, kPathCost);
        add_edge(q, p, soft, 20.0, kPathCost);
      }
    }
  }
  city.network = TransportNetwork(std::move(nodes), std::move(edges));

  for (int k = 0; k < spec.zones; ++k) city.zones.push_back({k, std::round((0.05 + 0.4 * uniform01(rng)) * 1000.0) / 1000.0});
  city.adjacency = zone_adjacency(g);
  Rng demand(derive_seed(seed, 0xDE3A));
  city.trips = sample_trips(city.network, spec.zones, spec.trips, spec.trip_weight, demand);
  validate(city);
  return city;
}

std::vector<std::filesystem::path> save_city(const CityBundle& city, const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  auto put = [&](const char* name, const std::string& text) {
    const auto p = dir / name;
    write_text_file(p, text);
    written.push_back(p);
  };
  put("terrain.txt", format_terrain(city.terrain));
  put("nodes.csv", format_nodes(city.network));
  put("edges.csv", format_edges(city.network));
  put("trips.csv", format_trips(city.trips));
  std::string zones = "id,green_fraction\n";
  for (const auto& z : city.zones) zones += fmt::format("{},{}\n", z.id, format_number(z.green_fraction));
  put("zones.csv", zones);
  std::string adj = "a,b\n";
  for (const auto& [a, b] : city.adjacency) adj += fmt::format("{},{}\n", a, b);
  put("zone_adjacency.csv", adj);
  return written;
}

CityBundle load_city(const std::filesystem::path& dir) {
  CityBundle city;
  city.terrain = load_terrain(dir / "terrain.txt");
  city.network = load_network(dir / "nodes.csv", dir / "edges.csv");
  city.trips = load_trips(dir / "trips.csv");
  const auto zt = parse_csv(read_text_file(dir / "zones.csv"), (dir / "zones.csv").string());
  const auto zid = zt.column("id"), zg = zt.column("green_fraction");
  for (std::size_t r = 0; r < zt.rows.size(); ++r) {
    city.zones.push_back({static_cast<int>(parse_int(zt.rows[r][zid], zt.where(r))), parse_double(zt.rows[r][zg], zt.where(r))});
  }
  const auto at = parse_csv(read_text_file(dir / "zone_adjacency.csv"), (dir / "zone_adjacency.csv").string());
  const auto ca = at.column("a"), cb = at.column("b");
  for (std::size_t r = 0; r < at.rows.size(); ++r) {
    int a = static_cast<int>(parse_int(at.rows[r][ca], at.where(r)));
    int b = static_cast<int>(parse_int(at.rows[r][cb], at.where(r)));
    if (a > b) std::swap(a, b);
    city.adjacency.push_back({a, b});
  }
  std::sort(city.adjacency.begin(), city.adjacency.end());
  city.adjacency.erase(std::unique(city.adjacency.begin(), city.adjacency.end()), city.adjacency.end());
  validate(city);
  return city;
}

}  // namespace climadapt
