#include "climadapt/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "climadapt/core.hpp"
#include "climadapt/text_io.hpp"

namespace climadapt {

long long TerrainGrid::cell_at(double x, double y) const {
  const double c = std::floor(x / cell_size_m);
  const double r = std::floor(y / cell_size_m);
  if (c < 0 || r < 0 || c >= width || r >= height) return -1;
  return static_cast<long long>(index(static_cast<int>(r), static_cast<int>(c)));
}

int TerrainGrid::zone_count() const {
  int hi = kNoZone;
  for (int z : zone_of_cell) hi = std::max(hi, z);
  return hi + 1;
}

std::vector<std::size_t> TerrainGrid::zone_cell_counts(int num_zones) const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(num_zones, 0)), 0);
  for (int z : zone_of_cell) {
    if (z >= 0 && z < num_zones) ++counts[static_cast<std::size_t>(z)];
  }
  return counts;
}

void validate(const TerrainGrid& grid) {
  if (grid.width < 2 || grid.height < 2) throw DataError("terrain: grid must be at least 2x2");
  if (!(grid.cell_size_m > 0.0) || !std::isfinite(grid.cell_size_m)) throw DataError("terrain: cell_size_m must be > 0");
  if (grid.elevation.size() != grid.size()) throw DataError("terrain: elevation count does not match width*height");
  if (grid.zone_of_cell.size() != grid.size()) throw DataError("terrain: zone count does not match width*height");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid.elevation[i])) throw DataError(fmt::format("terrain: cell {} has non-finite elevation", i));
    if (grid.zone_of_cell[i] < kNoZone) throw DataError(fmt::format("terrain: cell {} has invalid zone id", i));
    if (grid.is_nodata(i) && grid.zone_of_cell[i] != kNoZone) {
      throw DataError(fmt::format("terrain: no-data cell {} is assigned to zone {}", i, grid.zone_of_cell[i]));
    }
  }
}

TerrainGrid parse_terrain(std::string_view text, std::string_view source) {
  TerrainGrid grid;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  enum class Section { Header, Elevation, Zones } section = Section::Header;
  bool have_format = false;
  std::vector<std::string> values;
  auto require_dims = [&](std::string_view where) {
    if (grid.width <= 0 || grid.height <= 0) throw DataError(fmt::format("{}: width/height must precede data", where));
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto where = fmt::format("{}:{}", source, line_no);
    const auto colon = t.find(':');
    if (colon != std::string::npos) {
      const auto key = trim(std::string_view(t).substr(0, colon));
      const auto value = trim(std::string_view(t).substr(colon + 1));
      if (key == "format") {
        if (value != "climadapt-terrain/1") throw DataError(fmt::format("{}: unsupported format '{}'", where, value));
        have_format = true;
      } else if (key == "width") {
        grid.width = static_cast<int>(parse_int(value, where));
      } else if (key == "height") {
        grid.height = static_cast<int>(parse_int(value, where));
      } else if (key == "cell_size_m") {
        grid.cell_size_m = parse_double(value, where);
      } else if (key == "nodata") {
        grid.nodata = parse_double(value, where);
      } else if (key == "elevation") {
        require_dims(where);
        section = Section::Elevation;
        grid.elevation.reserve(grid.size());
      } else if (key == "zones") {
        require_dims(where);
        section = Section::Zones;
        grid.zone_of_cell.reserve(grid.size());
      } else {
        throw DataError(fmt::format("{}: unknown key '{}'", where, key));
      }
      continue;
    }
    if (section == Section::Header) throw DataError(fmt::format("{}: data row outside a section", where));
    const auto row = tokens(t);
    if (row.size() != static_cast<std::size_t>(grid.width)) {
      throw DataError(fmt::format("{}: expected {} values, got {}", where, grid.width, row.size()));
    }
    for (const auto& v : row) {
      if (section == Section::Elevation) {
        grid.elevation.push_back(parse_double(v, where));
      } else {
        grid.zone_of_cell.push_back(static_cast<int>(parse_int(v, where)));
      }
    }
  }
  if (!have_format) throw DataError(fmt::format("{}: missing 'format' line", source));
  try {
    validate(grid);
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", source, e.what()));
  }
  return grid;
}

TerrainGrid load_terrain(const std::filesystem::path& path) {
  return parse_terrain(read_text_file(path), path.string());
}

std::string format_terrain(const TerrainGrid& grid) {
  std::string out;
  out += "format: climadapt-terrain/1\n";
  out += fmt::format("width: {}\nheight: {}\n", grid.width, grid.height);
  out += fmt::format("cell_size_m: {}\nnodata: {}\n", format_number(grid.cell_size_m), format_number(grid.nodata));
  out += "elevation:\n";
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c) {
      if (c > 0) out += ' ';
      out += format_number(grid.elevation[grid.index(r, c)]);
    }
    out += '\n';
  }
  out += "zones:\n";
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c) {
      if (c > 0) out += ' ';
      out += fmt::format("{}", grid.zone_of_cell[grid.index(r, c)]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace climadapt
