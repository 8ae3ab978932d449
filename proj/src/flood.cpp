#include "climadapt/flood.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>

#include <fmt/format.h>

namespace climadapt {

namespace {

constexpr long long kNoReceiver = -1;
constexpr long long kToOutside = -2;
constexpr double kInf = std::numeric_limits<double>::infinity();

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  // Attaches b's root under a's root and returns the surviving root.
  std::size_t unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    parent_[b] = a;
    return a;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

DepressionModel::DepressionModel(TerrainGrid grid, BoundaryMode mode) : grid_(std::move(grid)), mode_(mode) {
  validate(grid_);
  const int zones = grid_.zone_count();
  zone_cells_.assign(static_cast<std::size_t>(std::max(zones, 0)), {});
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (grid_.zone_of_cell[i] >= 0) zone_cells_[static_cast<std::size_t>(grid_.zone_of_cell[i])].push_back(i);
  }
  build_tree();
  compute_leaf_ranges();
  compute_capacities();
}

double DepressionModel::zone_area_m2(int zone) const {
  if (zone < 0 || zone >= num_zones()) return 0.0;
  return static_cast<double>(zone_cells_[static_cast<std::size_t>(zone)].size()) * grid_.cell_area();
}

void DepressionModel::build_receivers(std::vector<long long>& receiver) const {
  const int W = grid_.width;
  const int H = grid_.height;
  const auto n = grid_.size();
  const auto& elev = grid_.elevation;
  receiver.assign(n, kNoReceiver);

  // Neighbours in ascending index order: up, left, right, down.
  auto for_neighbors = [&](std::size_t i, auto&& fn) {
    const int r = static_cast<int>(i / static_cast<std::size_t>(W));
    const int c = static_cast<int>(i % static_cast<std::size_t>(W));
    if (r > 0) fn(i - static_cast<std::size_t>(W));
    if (c > 0) fn(i - 1);
    if (c + 1 < W) fn(i + 1);
    if (r + 1 < H) fn(i + static_cast<std::size_t>(W));
  };

  for (std::size_t i = 0; i < n; ++i) {
    if (grid_.is_nodata(i)) continue;
    if (mode_ == BoundaryMode::Open) {
      const int r = static_cast<int>(i / static_cast<std::size_t>(W));
      const int c = static_cast<int>(i % static_cast<std::size_t>(W));
      bool outside = r == 0 || c == 0 || r == H - 1 || c == W - 1;
      for_neighbors(i, [&](std::size_t j) { outside = outside || grid_.is_nodata(j); });
      if (outside) {
        receiver[i] = kToOutside;
        continue;
      }
    }
    double lowest = elev[i];
    for_neighbors(i, [&](std::size_t j) {
      if (!grid_.is_nodata(j) && elev[j] < lowest) {
        lowest = elev[j];
        receiver[i] = static_cast<long long>(j);
      }
    });
  }

  // Flats drain towards the nearest cell that already has an outlet.
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < n; ++i) {
    if (!grid_.is_nodata(i) && receiver[i] != kNoReceiver) queue.push_back(i);
  }
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for_neighbors(u, [&](std::size_t j) {
      if (!grid_.is_nodata(j) && receiver[j] == kNoReceiver && elev[j] == elev[u]) {
        receiver[j] = static_cast<long long>(u);
        queue.push_back(j);
      }
    });
  }
}

void DepressionModel::build_tree() {
  const int W = grid_.width;
  const auto n = grid_.size();
  const auto& elev = grid_.elevation;

  std::vector<long long> receiver;
  build_receivers(receiver);

  basin_of_cell_.assign(n, -1);
  num_leaves_ = 0;
  if (mode_ == BoundaryMode::Open) outside_leaf_ = num_leaves_++;

  // Pits: connected equal-elevation groups without any outlet.
  for (std::size_t i = 0; i < n; ++i) {
    if (grid_.is_nodata(i) || receiver[i] != kNoReceiver || basin_of_cell_[i] >= 0) continue;
    const int leaf = num_leaves_++;
    std::vector<std::size_t> stack{i};
    basin_of_cell_[i] = leaf;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      const int r = static_cast<int>(u / static_cast<std::size_t>(W));
      const int c = static_cast<int>(u % static_cast<std::size_t>(W));
      const long long cand[4] = {r > 0 ? static_cast<long long>(u) - W : -1, c > 0 ? static_cast<long long>(u) - 1 : -1,
                                 c + 1 < W ? static_cast<long long>(u) + 1 : -1,
                                 r + 1 < grid_.height ? static_cast<long long>(u) + W : -1};
      for (long long j : cand) {
        if (j < 0) continue;
        const auto uj = static_cast<std::size_t>(j);
        if (!grid_.is_nodata(uj) && receiver[uj] == kNoReceiver && basin_of_cell_[uj] < 0 && elev[uj] == elev[u]) {
          basin_of_cell_[uj] = leaf;
          stack.push_back(uj);
        }
      }
    }
  }

  // Every other cell inherits the basin at the end of its drainage path.
  std::vector<std::size_t> path;
  for (std::size_t i = 0; i < n; ++i) {
    if (grid_.is_nodata(i) || basin_of_cell_[i] >= 0) continue;
    path.clear();
    auto u = i;
    int label = -1;
    while (true) {
      if (basin_of_cell_[u] >= 0) {
        label = basin_of_cell_[u];
        break;
      }
      path.push_back(u);
      if (receiver[u] == kToOutside) {
        label = outside_leaf_;
        break;
      }
      u = static_cast<std::size_t>(receiver[u]);
    }
    for (auto p : path) basin_of_cell_[p] = label;
  }

  leaf_cells_.assign(static_cast<std::size_t>(num_leaves_), {});
  for (std::size_t i = 0; i < n; ++i) {
    if (basin_of_cell_[i] >= 0) leaf_cells_[static_cast<std::size_t>(basin_of_cell_[i])].push_back(i);
  }
  for (auto& cells : leaf_cells_) {
    std::stable_sort(cells.begin(), cells.end(), [&](std::size_t a, std::size_t b) { return elev[a] < elev[b]; });
  }

  // Lowest saddle between each pair of adjacent basins.
  struct Saddle {
    double level;
    int basin_a, basin_b;  // basin_a < basin_b
  };
  std::map<std::pair<int, int>, Saddle> saddles;
  auto consider = [&](std::size_t a, std::size_t b) {
    if (grid_.is_nodata(a) || grid_.is_nodata(b)) return;
    int la = basin_of_cell_[a];
    int lb = basin_of_cell_[b];
    if (la == lb) return;
    const double level = std::max(elev[a], elev[b]);
    if (la > lb) std::swap(la, lb);
    auto [it, inserted] = saddles.try_emplace({la, lb}, Saddle{level, la, lb});
    if (!inserted && level < it->second.level) it->second.level = level;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % static_cast<std::size_t>(W));
    if (c + 1 < W) consider(i, i + 1);
    if (i + static_cast<std::size_t>(W) < n) consider(i, i + static_cast<std::size_t>(W));
  }
  std::vector<Saddle> order;
  order.reserve(saddles.size());
  for (const auto& [key, s] : saddles) order.push_back(s);
  std::stable_sort(order.begin(), order.end(), [](const Saddle& a, const Saddle& b) { return a.level < b.level; });

  nodes_.assign(static_cast<std::size_t>(num_leaves_), Node{});
  for (int l = 0; l < num_leaves_; ++l) {
    nodes_[static_cast<std::size_t>(l)].rep_leaf = l;
    nodes_[static_cast<std::size_t>(l)].ocean = l == outside_leaf_;
  }
  UnionFind uf(static_cast<std::size_t>(num_leaves_));
  std::vector<int> top(static_cast<std::size_t>(num_leaves_));
  std::iota(top.begin(), top.end(), 0);
  for (const auto& s : order) {
    const auto ra = uf.find(static_cast<std::size_t>(s.basin_a));
    const auto rb = uf.find(static_cast<std::size_t>(s.basin_b));
    if (ra == rb) continue;
    Node node;
    node.child[0] = top[ra];
    node.child[1] = top[rb];
    node.level = s.level;
    // Overflow from the side holding basin_a crosses the saddle into basin_b.
    node.spill_leaf[0] = s.basin_b;
    node.spill_leaf[1] = s.basin_a;
    node.ocean = nodes_[static_cast<std::size_t>(node.child[0])].ocean || nodes_[static_cast<std::size_t>(node.child[1])].ocean;
    node.rep_leaf = nodes_[static_cast<std::size_t>(node.child[0])].rep_leaf;
    const int id = static_cast<int>(nodes_.size());
    nodes_[static_cast<std::size_t>(node.child[0])].parent = id;
    nodes_[static_cast<std::size_t>(node.child[1])].parent = id;
    nodes_.push_back(node);
    top[uf.unite(ra, rb)] = id;
  }
  roots_.clear();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].parent < 0) roots_.push_back(static_cast<int>(i));
  }
}

void DepressionModel::compute_leaf_ranges() {
  leaf_order_.clear();
  leaf_position_.assign(static_cast<std::size_t>(num_leaves_), -1);
  for (int root : roots_) {
    // Iterative post-order.
    std::vector<std::pair<int, bool>> stack{{root, false}};
    while (!stack.empty()) {
      auto [id, expanded] = stack.back();
      stack.pop_back();
      auto& node = nodes_[static_cast<std::size_t>(id)];
      if (id < num_leaves_) {
        node.leaf_lo = static_cast<int>(leaf_order_.size());
        leaf_position_[static_cast<std::size_t>(id)] = node.leaf_lo;
        leaf_order_.push_back(id);
        node.leaf_hi = node.leaf_lo + 1;
        continue;
      }
      if (expanded) {
        node.leaf_lo = nodes_[static_cast<std::size_t>(node.child[0])].leaf_lo;
        node.leaf_hi = nodes_[static_cast<std::size_t>(node.child[1])].leaf_hi;
        continue;
      }
      stack.push_back({id, true});
      stack.push_back({node.child[1], false});
      stack.push_back({node.child[0], false});
    }
  }
}

void DepressionModel::compute_capacities() {
  const auto& elev = grid_.elevation;
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (basin_of_cell_[i] >= 0 && basin_of_cell_[i] != outside_leaf_) cells.push_back(i);
  }
  std::stable_sort(cells.begin(), cells.end(), [&](std::size_t a, std::size_t b) { return elev[a] < elev[b]; });

  UnionFind uf(static_cast<std::size_t>(num_leaves_));
  std::vector<double> count(static_cast<std::size_t>(num_leaves_), 0.0);
  std::vector<double> elev_sum(static_cast<std::size_t>(num_leaves_), 0.0);
  std::size_t next = 0;
  const double area = grid_.cell_area();

  for (auto& node : nodes_) node.capacity = kInf;
  for (std::size_t id = static_cast<std::size_t>(num_leaves_); id < nodes_.size(); ++id) {
    const auto& node = nodes_[id];
    while (next < cells.size() && elev[cells[next]] < node.level) {
      const auto c = cells[next++];
      const auto r = uf.find(static_cast<std::size_t>(basin_of_cell_[c]));
      count[r] += 1.0;
      elev_sum[r] += elev[c];
    }
    for (int child : node.child) {
      auto& ch = nodes_[static_cast<std::size_t>(child)];
      if (ch.ocean) continue;
      const auto r = uf.find(static_cast<std::size_t>(ch.rep_leaf));
      ch.capacity = std::max(0.0, area * (count[r] * node.level - elev_sum[r]));
    }
    const auto a = uf.find(static_cast<std::size_t>(nodes_[static_cast<std::size_t>(node.child[0])].rep_leaf));
    const auto b = uf.find(static_cast<std::size_t>(nodes_[static_cast<std::size_t>(node.child[1])].rep_leaf));
    const auto merged = uf.unite(a, b);
    const auto other = merged == a ? b : a;
    count[merged] += count[other];
    elev_sum[merged] += elev_sum[other];
  }
}

bool DepressionModel::in_subtree(int leaf, int node) const {
  const int pos = leaf_position_[static_cast<std::size_t>(leaf)];
  const auto& n = nodes_[static_cast<std::size_t>(node)];
  return pos >= n.leaf_lo && pos < n.leaf_hi;
}

void DepressionModel::flood_full(int node, double level, std::vector<double>& depth) const {
  const auto& n = nodes_[static_cast<std::size_t>(node)];
  for (int p = n.leaf_lo; p < n.leaf_hi; ++p) {
    const int leaf = leaf_order_[static_cast<std::size_t>(p)];
    if (leaf == outside_leaf_) continue;
    for (auto c : leaf_cells_[static_cast<std::size_t>(leaf)]) {
      const double e = grid_.elevation[c];
      if (e >= level) break;
      depth[c] = level - e;
    }
  }
}

void DepressionModel::flood_lake(int node, double volume_m3, std::vector<double>& depth) const {
  if (volume_m3 <= 0.0) return;
  const auto& n = nodes_[static_cast<std::size_t>(node)];
  const auto& elev = grid_.elevation;
  std::vector<std::size_t> cells;
  for (int p = n.leaf_lo; p < n.leaf_hi; ++p) {
    const int leaf = leaf_order_[static_cast<std::size_t>(p)];
    if (leaf == outside_leaf_) continue;
    const auto& lc = leaf_cells_[static_cast<std::size_t>(leaf)];
    cells.insert(cells.end(), lc.begin(), lc.end());
  }
  if (n.leaf_hi - n.leaf_lo > 1) {
    std::stable_sort(cells.begin(), cells.end(), [&](std::size_t a, std::size_t b) { return elev[a] < elev[b]; });
  }
  if (cells.empty()) return;

  // Raise a level surface over the k lowest cells until the volume fits.
  const double water = volume_m3 / grid_.cell_area();
  double prefix = 0.0;
  double level = 0.0;
  std::size_t k = 0;
  while (k < cells.size()) {
    prefix += elev[cells[k]];
    ++k;
    level = (water + prefix) / static_cast<double>(k);
    if (k == cells.size() || level <= elev[cells[k]]) break;
  }
  for (std::size_t j = 0; j < k; ++j) depth[cells[j]] = std::max(0.0, level - elev[cells[j]]);
}

FillResult DepressionModel::fill(std::span<const double> cell_inflow_m3) const {
  if (cell_inflow_m3.size() != grid_.size()) {
    throw ShapeError(fmt::format("fill: expected {} cell inflows, got {}", grid_.size(), cell_inflow_m3.size()));
  }
  FillResult result;
  result.cell_depth.assign(grid_.size(), 0.0);

  std::vector<double> water(nodes_.size(), 0.0);
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    const double v = cell_inflow_m3[i];
    if (v < 0.0 || !std::isfinite(v)) throw ContractViolation(fmt::format("fill: cell {} has invalid inflow", i));
    result.inflow_m3 += v;
    if (basin_of_cell_[i] < 0) {
      result.boundary_outflow_m3 += v;
    } else {
      water[static_cast<std::size_t>(basin_of_cell_[i])] += v;
    }
  }
  for (std::size_t id = static_cast<std::size_t>(num_leaves_); id < nodes_.size(); ++id) {
    water[id] = water[static_cast<std::size_t>(nodes_[id].child[0])] + water[static_cast<std::size_t>(nodes_[id].child[1])];
  }

  struct Task {
    int node;
    std::vector<std::pair<int, double>> extra;  // spilled-in volume by landing leaf
  };
  std::vector<Task> stack;
  for (int root : roots_) stack.push_back({root, {}});
  while (!stack.empty()) {
    Task task = std::move(stack.back());
    stack.pop_back();
    double total = water[static_cast<std::size_t>(task.node)];
    for (const auto& [leaf, v] : task.extra) total += v;

    if (task.node < num_leaves_) {
      if (task.node == outside_leaf_) {
        result.boundary_outflow_m3 += total;
      } else {
        flood_lake(task.node, total, result.cell_depth);
      }
      continue;
    }

    const auto& node = nodes_[static_cast<std::size_t>(task.node)];
    std::vector<std::pair<int, double>> extra[2];
    double w[2];
    double cap[2];
    for (int k = 0; k < 2; ++k) {
      const auto& ch = nodes_[static_cast<std::size_t>(node.child[k])];
      w[k] = water[static_cast<std::size_t>(node.child[k])];
      cap[k] = ch.ocean ? kInf : ch.capacity;
    }
    for (const auto& e : task.extra) {
      const int k = in_subtree(e.first, node.child[0]) ? 0 : 1;
      extra[k].push_back(e);
      w[k] += e.second;
    }

    if (!node.ocean && w[0] + w[1] >= cap[0] + cap[1]) {
      flood_lake(task.node, total, result.cell_depth);
    } else if (w[0] > cap[0]) {
      flood_full(node.child[0], node.level, result.cell_depth);
      extra[1].push_back({node.spill_leaf[0], w[0] - cap[0]});
      stack.push_back({node.child[1], std::move(extra[1])});
    } else if (w[1] > cap[1]) {
      flood_full(node.child[1], node.level, result.cell_depth);
      extra[0].push_back({node.spill_leaf[1], w[1] - cap[1]});
      stack.push_back({node.child[0], std::move(extra[0])});
    } else {
      stack.push_back({node.child[1], std::move(extra[1])});
      stack.push_back({node.child[0], std::move(extra[0])});
    }
  }

  const double area = grid_.cell_area();
  for (double d : result.cell_depth) result.ponded_m3 += d * area;
  return result;
}

FillResult DepressionModel::fill_zones(std::span<const double> zone_inflow_m3) const {
  std::vector<double> cell_inflow(grid_.size(), 0.0);
  for (std::size_t z = 0; z < zone_inflow_m3.size(); ++z) {
    const double v = zone_inflow_m3[z];
    if (v == 0.0) continue;
    if (z >= zone_cells_.size() || zone_cells_[z].empty()) {
      throw DataError(fmt::format("zone {} receives inflow but has no terrain cells", z));
    }
    const double per_cell = v / static_cast<double>(zone_cells_[z].size());
    for (auto c : zone_cells_[z]) cell_inflow[c] += per_cell;
  }
  return fill(cell_inflow);
}

FillResult fill_depressions(const TerrainGrid& grid, std::span<const double> zone_inflow_m3, BoundaryMode mode) {
  return DepressionModel(grid, mode).fill_zones(zone_inflow_m3);
}

ElementSampler::ElementSampler(const TerrainGrid& grid, std::span<const Segment> segments) {
  cells_.reserve(segments.size());
  const double step = grid.cell_size_m / 4.0;
  for (const auto& s : segments) {
    std::vector<std::size_t> cells;
    const double length = std::hypot(s.x1 - s.x0, s.y1 - s.y0);
    const int n = std::max(1, static_cast<int>(std::ceil(length / step)));
    for (int k = 0; k <= n; ++k) {
      const double t = static_cast<double>(k) / n;
      const long long c = grid.cell_at(s.x0 + t * (s.x1 - s.x0), s.y0 + t * (s.y1 - s.y0));
      if (c < 0 || grid.is_nodata(static_cast<std::size_t>(c))) continue;
      const auto uc = static_cast<std::size_t>(c);
      if (std::find(cells.begin(), cells.end(), uc) == cells.end()) cells.push_back(uc);
    }
    cells_.push_back(std::move(cells));
  }
}

std::vector<double> ElementSampler::sample(std::span<const double> cell_depth, ElementDepthMode mode) const {
  std::vector<double> out(cells_.size(), 0.0);
  for (std::size_t e = 0; e < cells_.size(); ++e) {
    const auto& cells = cells_[e];
    if (cells.empty()) continue;
    double acc = 0.0;
    for (auto c : cells) acc = mode == ElementDepthMode::Max ? std::max(acc, cell_depth[c]) : acc + cell_depth[c];
    out[e] = mode == ElementDepthMode::Max ? acc : acc / static_cast<double>(cells.size());
  }
  return out;
}

std::vector<double> zone_inflows(const RainfallEvent& event, const DepressionModel& model, const ZoneLedger& ledger,
                                 const InterventionCatalog& catalog) {
  std::vector<double> inflow(static_cast<std::size_t>(ledger.num_zones()), 0.0);
  for (int z = 0; z < ledger.num_zones(); ++z) {
    const double runoff = event.depth_mm / 1000.0 * model.zone_area_m2(z);
    inflow[static_cast<std::size_t>(z)] = std::max(0.0, runoff - ledger.effective_capacity_m3(z, catalog));
  }
  return inflow;
}

FloodField compute_flood(const RainfallEvent& event, const DepressionModel& model, const ElementSampler& sampler,
                         const ZoneLedger& ledger, const InterventionCatalog& catalog, ElementDepthMode element_mode) {
  auto fill = model.fill_zones(zone_inflows(event, model, ledger, catalog));
  FloodField field;
  field.element_depth = sampler.sample(fill.cell_depth, element_mode);
  field.cell_depth = std::move(fill.cell_depth);
  field.ponded_m3 = fill.ponded_m3;
  field.boundary_outflow_m3 = fill.boundary_outflow_m3;
  return field;
}

}  // namespace climadapt
