#include "uavtl/radiomap.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "uavtl/error.hpp"

namespace uavtl::radiomap {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) fail(ErrorKind::data, "cannot format value");
  return std::string(buf, end);
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string_view line =
        text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  while (!lines.empty() && split_ws(lines.back()).empty()) lines.pop_back();
  return lines;
}

bool parse_double(std::string_view tok, double& out) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc{} && ptr == tok.data() + tok.size() && std::isfinite(out);
}

bool parse_int(std::string_view tok, int& out) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc{} && ptr == tok.data() + tok.size();
}

struct ParsedTable {
  GridGeometry geometry;
  std::vector<double> values;
  std::vector<bool> missing;
};

ParsedTable parse_table(std::string_view text, std::string_view tag, bool allow_missing) {
  const auto lines = split_lines(text);
  if (lines.empty()) fail(ErrorKind::parse, "line 1: empty input, expected '" + std::string(tag) + " v1' header");
  const auto header = split_ws(lines[0]);
  if (header.size() != 7 || header[0] != tag || header[1] != "v1") {
    fail(ErrorKind::parse, "line 1: malformed header, expected '" + std::string(tag) +
                               " v1 <cols> <rows> <spacing_m> <origin_x> <origin_y>'");
  }
  ParsedTable t;
  GridGeometry& g = t.geometry;
  if (!parse_int(header[2], g.cols) || g.cols <= 0)
    fail(ErrorKind::parse, "line 1: invalid column count '" + std::string(header[2]) + "'");
  if (!parse_int(header[3], g.rows) || g.rows <= 0)
    fail(ErrorKind::parse, "line 1: invalid row count '" + std::string(header[3]) + "'");
  if (!parse_double(header[4], g.spacing_m) || g.spacing_m <= 0.0)
    fail(ErrorKind::parse, "line 1: invalid spacing '" + std::string(header[4]) + "'");
  if (!parse_double(header[5], g.origin_x) || !parse_double(header[6], g.origin_y))
    fail(ErrorKind::parse, "line 1: invalid origin");

  std::size_t found = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) found += split_ws(lines[i]).size();
  const std::size_t expected = g.cell_count();
  if (found != expected || lines.size() - 1 != static_cast<std::size_t>(g.rows)) {
    std::ostringstream os;
    os << "dimension mismatch: header declares " << g.cols << "x" << g.rows << " = " << expected
       << " values in " << g.rows << " rows, found " << found << " values in "
       << lines.size() - 1 << " rows";
    fail(ErrorKind::parse, os.str());
  }

  t.values.assign(expected, 0.0);
  t.missing.assign(expected, false);
  for (int row = 0; row < g.rows; ++row) {
    const auto toks = split_ws(lines[row + 1]);
    if (toks.size() != static_cast<std::size_t>(g.cols)) {
      std::ostringstream os;
      os << "line " << row + 2 << " (row " << row << "): expected " << g.cols << " values, found "
         << toks.size();
      fail(ErrorKind::parse, os.str());
    }
    for (int col = 0; col < g.cols; ++col) {
      const std::size_t idx = g.index(col, row);
      if (allow_missing && toks[col] == "NA") {
        t.missing[idx] = true;
        continue;
      }
      if (!parse_double(toks[col], t.values[idx])) {
        std::ostringstream os;
        os << "line " << row + 2 << " (row " << row << ", col " << col << "): cannot parse '"
           << toks[col] << "'";
        fail(ErrorKind::parse, os.str());
      }
    }
  }
  return t;
}

std::string header_line(std::string_view tag, const GridGeometry& g) {
  std::string s(tag);
  s += " v1 " + std::to_string(g.cols) + " " + std::to_string(g.rows) + " " +
       format_double(g.spacing_m) + " " + format_double(g.origin_x) + " " +
       format_double(g.origin_y) + "\n";
  return s;
}

std::string serialize_table(std::string_view tag, const GridGeometry& g,
                            const std::vector<double>& values, const std::vector<bool>* missing) {
  std::string out = header_line(tag, g);
  for (int row = 0; row < g.rows; ++row) {
    for (int col = 0; col < g.cols; ++col) {
      const std::size_t idx = g.index(col, row);
      if (col > 0) out += ' ';
      if (missing && (*missing)[idx])
        out += "NA";
      else
        out += format_double(values[idx]);
    }
    out += '\n';
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::config, "cannot open '" + path + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

std::size_t RawGrid::missing_count() const {
  return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), true));
}

void OutageMap::validate() const {
  if (geometry.cols <= 0 || geometry.rows <= 0) fail(ErrorKind::data, "outage map has empty dimensions");
  if (values.size() != geometry.cell_count()) fail(ErrorKind::data, "outage map size does not match its dimensions");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0 && values[i] <= 1.0)) {
      fail(ErrorKind::data, "outage value out of [0,1] at cell " + std::to_string(i));
    }
  }
}

RawGrid parse_grid(std::string_view text) {
  auto t = parse_table(text, "GRID", true);
  return RawGrid{t.geometry, std::move(t.values), std::move(t.missing)};
}

std::string serialize_grid(const RawGrid& g) {
  return serialize_table("GRID", g.geometry, g.values, &g.missing);
}

std::string serialize_grid(const SinrGrid& g) {
  return serialize_table("GRID", g.geometry, g.values, nullptr);
}

OutageMap parse_outage(std::string_view text) {
  auto t = parse_table(text, "OUTAGE", false);
  OutageMap m{t.geometry, std::move(t.values)};
  for (int row = 0; row < m.geometry.rows; ++row) {
    for (int col = 0; col < m.geometry.cols; ++col) {
      const double v = m.at(col, row);
      if (v < 0.0 || v > 1.0) {
        fail(ErrorKind::parse, "line " + std::to_string(row + 2) + " (row " + std::to_string(row) +
                                   ", col " + std::to_string(col) + "): outage value outside [0,1]");
      }
    }
  }
  return m;
}

std::string serialize_outage(const OutageMap& m) {
  return serialize_table("OUTAGE", m.geometry, m.values, nullptr);
}

RawGrid read_grid_file(const std::string& path) { return parse_grid(read_text_file(path)); }

OutageMap read_outage_file(const std::string& path) { return parse_outage(read_text_file(path)); }

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::config, "cannot open '" + path + "' for writing");
  out << contents;
  if (!out) fail(ErrorKind::config, "write to '" + path + "' failed");
}

double median(std::vector<double> values) {
  if (values.empty()) fail(ErrorKind::data, "median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

SinrGrid median_fill(const RawGrid& g) {
  const GridGeometry& geo = g.geometry;
  std::vector<double> values = g.values;
  std::vector<bool> missing = g.missing;
  if (missing.size() != values.size()) missing.resize(values.size(), false);

  std::size_t remaining = static_cast<std::size_t>(std::count(missing.begin(), missing.end(), true));
  if (remaining == values.size()) fail(ErrorKind::data, "every cell of the grid is missing");

  std::vector<double> neighbours;
  neighbours.reserve(8);
  while (remaining > 0) {
    std::vector<std::pair<std::size_t, double>> updates;
    for (int row = 0; row < geo.rows; ++row) {
      for (int col = 0; col < geo.cols; ++col) {
        const std::size_t idx = geo.index(col, row);
        if (!missing[idx]) continue;
        neighbours.clear();
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const int r = row + dr, c = col + dc;
            if (r < 0 || c < 0 || r >= geo.rows || c >= geo.cols) continue;
            const std::size_t n = geo.index(c, r);
            if (!missing[n]) neighbours.push_back(values[n]);
          }
        }
        if (!neighbours.empty()) updates.emplace_back(idx, median(neighbours));
      }
    }
    if (updates.empty()) {
      // Disconnected gaps: nothing adjacent is known, use the global median.
      std::vector<double> present;
      for (std::size_t i = 0; i < values.size(); ++i)
        if (!missing[i]) present.push_back(values[i]);
      const double fallback = median(std::move(present));
      for (std::size_t i = 0; i < values.size(); ++i)
        if (missing[i]) updates.emplace_back(i, fallback);
    }
    for (auto [idx, v] : updates) {
      values[idx] = v;
      missing[idx] = false;
    }
    remaining -= updates.size();
  }
  return SinrGrid{geo, std::move(values)};
}

RawGrid to_raw(const SinrGrid& g) {
  return RawGrid{g.geometry, g.values, std::vector<bool>(g.values.size(), false)};
}

namespace {

double lerp_bounded(double a, double b, double t) {
  const double v = a + t * (b - a);
  return std::clamp(v, std::min(a, b), std::max(a, b));
}

// Source coordinate for destination index i when resampling n_src -> n_dst
// with corner alignment.
double source_coord(int i, int n_src, int n_dst) {
  if (n_dst == 1) return 0.5 * (n_src - 1);
  return static_cast<double>(i) * (n_src - 1) / (n_dst - 1);
}

}  // namespace

SinrGrid rescale(const SinrGrid& g, int target_cols, int target_rows) {
  if (target_cols <= 0 || target_rows <= 0) fail(ErrorKind::usage, "rescale target dimensions must be positive");
  const GridGeometry& src = g.geometry;
  GridGeometry dst = src;
  dst.cols = target_cols;
  dst.rows = target_rows;
  dst.spacing_m = target_cols == src.cols ? src.spacing_m : src.width_m() / target_cols;

  std::vector<double> out(dst.cell_count());
  for (int row = 0; row < target_rows; ++row) {
    const double sy = source_coord(row, src.rows, target_rows);
    const int y0 = std::min(static_cast<int>(std::floor(sy)), src.rows - 1);
    const int y1 = std::min(y0 + 1, src.rows - 1);
    const double ty = sy - y0;
    for (int col = 0; col < target_cols; ++col) {
      const double sx = source_coord(col, src.cols, target_cols);
      const int x0 = std::min(static_cast<int>(std::floor(sx)), src.cols - 1);
      const int x1 = std::min(x0 + 1, src.cols - 1);
      const double tx = sx - x0;
      const double bottom = lerp_bounded(g.at(x0, y0), g.at(x1, y0), tx);
      const double top = lerp_bounded(g.at(x0, y1), g.at(x1, y1), tx);
      out[dst.index(col, row)] = lerp_bounded(bottom, top, ty);
    }
  }
  return SinrGrid{dst, std::move(out)};
}

double outage_probability(double sinr_db, double gamma_th_db) {
  const double ratio = std::pow(10.0, (gamma_th_db - sinr_db) / 10.0);
  return -std::expm1(-ratio);
}

OutageMap sinr_to_outage(const SinrGrid& g, double gamma_th_db) {
  if (!std::isfinite(gamma_th_db)) fail(ErrorKind::domain, "outage threshold must be finite");
  OutageMap m{g.geometry, std::vector<double>(g.values.size())};
  for (std::size_t i = 0; i < g.values.size(); ++i)
    m.values[i] = outage_probability(g.values[i], gamma_th_db);
  return m;
}

namespace {

int locate_axis(double coord, double origin, double spacing, int count) {
  const double f = (coord - origin) / spacing;
  int idx = static_cast<int>(std::floor(f));
  if (idx > 0 && static_cast<double>(idx) == f) --idx;
  return std::clamp(idx, 0, count - 1);
}

}  // namespace

CellIndex locate(const GridGeometry& g, Vec2 pos) {
  if (!g.extent().contains(pos)) {
    std::ostringstream os;
    os << "position (" << pos.x << ", " << pos.y << ") lies outside the map extent";
    fail(ErrorKind::domain, os.str());
  }
  return {locate_axis(pos.x, g.origin_x, g.spacing_m, g.cols),
          locate_axis(pos.y, g.origin_y, g.spacing_m, g.rows)};
}

double outage_at(const OutageMap& m, Vec2 pos) {
  const CellIndex c = locate(m.geometry, pos);
  return m.at(c.col, c.row);
}

}  // namespace uavtl::radiomap
