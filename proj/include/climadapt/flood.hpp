#pragma once

#include <span>
#include <vector>

#include "climadapt/forcing.hpp"
#include "climadapt/interventions.hpp"
#include "climadapt/terrain.hpp"

namespace climadapt {

// Open: the raster edge and no-data cells are sinks; water reaching them
// leaves the domain. Closed: the raster is a sealed basin.
enum class BoundaryMode { Open, Closed };

// How a network element's depth is derived from the cells it crosses.
enum class ElementDepthMode { Max, Mean };

struct FillResult {
  std::vector<double> cell_depth;  // m, >= 0
  double inflow_m3 = 0.0;
  double ponded_m3 = 0.0;
  double boundary_outflow_m3 = 0.0;
};

struct FloodField {
  std::vector<double> cell_depth;     // m
  std::vector<double> element_depth;  // m, one per network edge
  double ponded_m3 = 0.0;
  double boundary_outflow_m3 = 0.0;
};

// Depression hierarchy of a static terrain, built once and reused for every
// event.
//
// Each cell drains to its lowest strictly-lower neighbour; flats drain
// towards their nearest outlet. Cells that cannot drain form pits, and every
// cell belongs to the basin of the pit (or the outside) it drains to. Basins
// are merged in order of their lowest shared saddle, giving a binary merge
// tree. Filling walks the tree from the top: a child whose water exceeds its
// volume below the merge level is full and spills the excess into its
// sibling at the leaf the saddle drains to; when both children are full the
// node holds one lake with a level surface. Whatever reaches the outside is
// boundary outflow.
class DepressionModel {
 public:
  explicit DepressionModel(TerrainGrid grid, BoundaryMode mode = BoundaryMode::Open);

  // Water volume entering each cell (m3). Cells without elevation data
  // contribute straight to outflow.
  FillResult fill(std::span<const double> cell_inflow_m3) const;
  // Each zone's volume spread uniformly over that zone's cells.
  FillResult fill_zones(std::span<const double> zone_inflow_m3) const;

  const TerrainGrid& grid() const { return grid_; }
  BoundaryMode mode() const { return mode_; }
  int num_zones() const { return static_cast<int>(zone_cells_.size()); }
  double zone_area_m2(int zone) const;
  std::size_t num_basins() const { return static_cast<std::size_t>(num_leaves_); }
  // Leaf basin of each cell (-1 for no-data cells).
  const std::vector<int>& basin_of_cell() const { return basin_of_cell_; }

 private:
  struct Node {
    int child[2] = {-1, -1};
    int parent = -1;
    double level = 0.0;          // merge elevation (internal nodes)
    int spill_leaf[2] = {-1, -1};  // where overflow from child k lands
    bool ocean = false;          // subtree contains the outside
    double capacity = 0.0;       // volume below the parent's level (m3)
    int leaf_lo = 0;             // subtree leaves are leaf_order_[leaf_lo, leaf_hi)
    int leaf_hi = 0;
    int rep_leaf = -1;
  };

  void build_receivers(std::vector<long long>& receiver) const;
  void build_tree();
  void compute_capacities();
  void compute_leaf_ranges();
  bool in_subtree(int leaf, int node) const;

  void flood_full(int node, double level, std::vector<double>& depth) const;
  void flood_lake(int node, double volume_m3, std::vector<double>& depth) const;

  TerrainGrid grid_;
  BoundaryMode mode_;
  std::vector<int> basin_of_cell_;
  int num_leaves_ = 0;
  int outside_leaf_ = -1;
  std::vector<Node> nodes_;
  std::vector<int> roots_;
  std::vector<std::vector<std::size_t>> leaf_cells_;  // ascending elevation
  std::vector<int> leaf_order_;
  std::vector<int> leaf_position_;
  std::vector<std::vector<std::size_t>> zone_cells_;
};

// Convenience wrapper for a one-off fill.
FillResult fill_depressions(const TerrainGrid& grid, std::span<const double> zone_inflow_m3,
                            BoundaryMode mode = BoundaryMode::Open);

struct Segment {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
};

// Cells crossed by each network element, sampled every quarter cell.
class ElementSampler {
 public:
  ElementSampler() = default;
  ElementSampler(const TerrainGrid& grid, std::span<const Segment> segments);

  std::vector<double> sample(std::span<const double> cell_depth, ElementDepthMode mode) const;
  std::size_t size() const { return cells_.size(); }
  std::span<const std::size_t> cells(std::size_t element) const { return cells_[element]; }

 private:
  std::vector<std::vector<std::size_t>> cells_;
};

// Per-zone runoff volume: rainfall depth over the zone area minus the
// effective capacity of active interventions, clamped at zero.
std::vector<double> zone_inflows(const RainfallEvent& event, const DepressionModel& model, const ZoneLedger& ledger,
                                 const InterventionCatalog& catalog);

FloodField compute_flood(const RainfallEvent& event, const DepressionModel& model, const ElementSampler& sampler,
                         const ZoneLedger& ledger, const InterventionCatalog& catalog,
                         ElementDepthMode element_mode = ElementDepthMode::Max);

}  // namespace climadapt
