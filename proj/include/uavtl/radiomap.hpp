#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "uavtl/geometry.hpp"

namespace uavtl::radiomap {

// Row-major grid geometry shared by every map type. Row r spans
// [origin_y + r*spacing, origin_y + (r+1)*spacing], likewise for columns.
struct GridGeometry {
  int cols = 0;
  int rows = 0;
  double spacing_m = 0.0;
  double origin_x = 0.0;
  double origin_y = 0.0;

  std::size_t cell_count() const { return static_cast<std::size_t>(cols) * rows; }
  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * cols + col;
  }
  double width_m() const { return cols * spacing_m; }
  double height_m() const { return rows * spacing_m; }
  Vec2 cell_center(int col, int row) const {
    return {origin_x + (col + 0.5) * spacing_m, origin_y + (row + 0.5) * spacing_m};
  }
  Rect extent() const { return {origin_x, origin_y, origin_x + width_m(), origin_y + height_m()}; }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

// SINR grid as read from a receiver-grid export; cells may be missing.
struct RawGrid {
  GridGeometry geometry;
  std::vector<double> values;  // dB; ignored where missing[i]
  std::vector<bool> missing;

  std::size_t missing_count() const;
  friend bool operator==(const RawGrid&, const RawGrid&) = default;
};

struct SinrGrid {
  GridGeometry geometry;
  std::vector<double> values;  // dB, all finite

  double at(int col, int row) const { return values[geometry.index(col, row)]; }
  friend bool operator==(const SinrGrid&, const SinrGrid&) = default;
};

struct OutageMap {
  GridGeometry geometry;
  std::vector<double> values;  // probability in [0, 1]

  double at(int col, int row) const { return values[geometry.index(col, row)]; }
  void validate() const;
  friend bool operator==(const OutageMap&, const OutageMap&) = default;
};

// GRID v1 text format. Errors carry the 1-based line and column of the
// offending token.
RawGrid parse_grid(std::string_view text);
std::string serialize_grid(const RawGrid& g);
std::string serialize_grid(const SinrGrid& g);

// OUTAGE v1 text format.
OutageMap parse_outage(std::string_view text);
std::string serialize_outage(const OutageMap& m);

RawGrid read_grid_file(const std::string& path);
OutageMap read_outage_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

// Fill missing cells with the median of their present 8-neighbours, sweeping
// until every cell is present. Each sweep reads only values that were present
// when it started.
SinrGrid median_fill(const RawGrid& g);
RawGrid to_raw(const SinrGrid& g);

// Median with the even-count convention: mean of the two central values.
double median(std::vector<double> values);

// Bilinear resampling in the dB domain, corner-aligned. The x extent is kept;
// the new spacing is width / target_cols.
SinrGrid rescale(const SinrGrid& g, int target_cols, int target_rows);

// Rayleigh outage around the mean SINR: 1 - exp(-gamma_th / mean_sinr).
double outage_probability(double sinr_db, double gamma_th_db);
OutageMap sinr_to_outage(const SinrGrid& g, double gamma_th_db);

struct CellIndex {
  int col = 0;
  int row = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

// Containing cell; points on a shared edge go to the lower index.
CellIndex locate(const GridGeometry& g, Vec2 pos);
double outage_at(const OutageMap& m, Vec2 pos);

}  // namespace uavtl::radiomap
