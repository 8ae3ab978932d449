#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace climadapt {

inline constexpr int kNoZone = -1;

// Raster terrain. Cells are stored row-major; cell (row, col) covers
// x in [col*cell_size, (col+1)*cell_size), y in [row*cell_size, ...).
struct TerrainGrid {
  int width = 0;
  int height = 0;
  double cell_size_m = 1.0;
  double nodata = -9999.0;
  std::vector<double> elevation;
  std::vector<int> zone_of_cell;  // kNoZone for cells outside every zone

  std::size_t size() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col);
  }
  double cell_area() const { return cell_size_m * cell_size_m; }
  bool is_nodata(std::size_t i) const { return elevation[i] == nodata; }
  // Cell containing point (x, y); -1 when outside the raster.
  long long cell_at(double x, double y) const;

  // Highest zone id + 1.
  int zone_count() const;
  // Number of cells in each zone, indexed by zone id.
  std::vector<std::size_t> zone_cell_counts(int num_zones) const;
};

// Throws DataError on malformed grids (sizes, non-finite elevations,
// zone ids below kNoZone, zoned no-data cells).
void validate(const TerrainGrid& grid);

TerrainGrid parse_terrain(std::string_view text, std::string_view source);
TerrainGrid load_terrain(const std::filesystem::path& path);
std::string format_terrain(const TerrainGrid& grid);

}  // namespace climadapt
