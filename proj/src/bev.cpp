#include "hyperdet/bev.hpp"

#include <charconv>
#include <cmath>
#include <map>

#include "hyperdet/error.hpp"
#include "hyperdet/io.hpp"

namespace hyperdet::bev {

namespace {

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

[[noreturn]] void pgm_error(std::size_t offset, const std::string& what) {
  fail(ErrorCode::kFormat, "PGM byte offset " + std::to_string(offset) + ": " + what);
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

// Skips whitespace and '#' comments between header tokens.
void skip_separators(std::string_view b, std::size_t& pos) {
  while (pos < b.size()) {
    if (is_space(b[pos])) {
      ++pos;
    } else if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
}

long read_header_int(std::string_view b, std::size_t& pos, const char* name) {
  skip_separators(b, pos);
  const std::size_t start = pos;
  while (pos < b.size() && b[pos] >= '0' && b[pos] <= '9') ++pos;
  if (pos == start) pgm_error(start, std::string("expected ") + name);
  if (pos - start > 9) pgm_error(start, std::string(name) + " too large");
  long v = 0;
  std::from_chars(b.data() + start, b.data() + pos, v);
  return v;
}

}  // namespace

void GridSpec::check() const {
  if (!(x_max > x_min) || !(y_max > y_min)) fail(ErrorCode::kConfig, "grid extent must be non-empty");
  if (width <= 0 || height <= 0) fail(ErrorCode::kConfig, "grid width/height must be positive");
  const double rx = (x_max - x_min) / width;
  const double ry = (y_max - y_min) / height;
  if (std::abs(rx - ry) > 1e-12 * std::max(rx, ry)) {
    fail(ErrorCode::kConfig, "grid resolution differs between x and y");
  }
}

std::size_t BEVGrid::count_at_least(std::uint8_t tau) const {
  std::size_t n = 0;
  for (std::uint8_t v : intensity) n += v >= tau ? 1 : 0;
  return n;
}

std::optional<PixelIndex> pixel_of(const GridSpec& spec, double x, double y) {
  if (!(x >= spec.x_min && x < spec.x_max && y >= spec.y_min && y < spec.y_max)) return std::nullopt;
  const double rx = (spec.x_max - spec.x_min) / spec.width;
  const double ry = (spec.y_max - spec.y_min) / spec.height;
  int col = static_cast<int>(std::floor((x - spec.x_min) / rx));
  int row = static_cast<int>(std::floor((y - spec.y_min) / ry));
  // Rounding can push a coordinate just below the upper edge onto the edge.
  col = std::min(std::max(col, 0), spec.width - 1);
  row = std::min(std::max(row, 0), spec.height - 1);
  return PixelIndex{row, col};
}

Vec2 pixel_center(const GridSpec& spec, int row, int col) {
  const double rx = (spec.x_max - spec.x_min) / spec.width;
  const double ry = (spec.y_max - spec.y_min) / spec.height;
  return {spec.x_min + (col + 0.5) * rx, spec.y_min + (row + 0.5) * ry};
}

RasterResult rasterize(const PointCloud& cloud, const GridSpec& spec) {
  spec.check();
  RasterResult res{BEVGrid(spec), 0};
  for (const RadarPoint& p : cloud.points) {
    const auto px = pixel_of(spec, p.x, p.y);
    if (!px) {
      ++res.skipped;
      continue;
    }
    res.grid.at(px->row, px->col) = 255;
  }
  return res;
}

BEVGrid threshold(const BEVGrid& grid, std::uint8_t tau_int) {
  BEVGrid out = grid;
  for (std::uint8_t& v : out.intensity) v = v >= tau_int ? 255 : 0;
  return out;
}

std::vector<ForegroundPixel> derasterize(const BEVGrid& grid, std::uint8_t tau_int) {
  std::vector<ForegroundPixel> out;
  for (int row = 0; row < grid.spec.height; ++row) {
    for (int col = 0; col < grid.spec.width; ++col) {
      const std::uint8_t v = grid.at(row, col);
      if (v < tau_int) continue;
      const Vec2 c = pixel_center(grid.spec, row, col);
      out.push_back({c.x(), c.y(), static_cast<double>(v) / 255.0});
    }
  }
  return out;
}

std::string encode_pgm(const BEVGrid& grid) {
  std::string out = "P5\n" + std::to_string(grid.spec.width) + " " +
                    std::to_string(grid.spec.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(grid.intensity.data()), grid.intensity.size());
  return out;
}

BEVGrid decode_pgm(std::string_view b, const GridSpec& spec) {
  if (b.size() < 2 || b[0] != 'P' || b[1] != '5') pgm_error(0, "missing P5 magic");
  std::size_t pos = 2;
  if (pos >= b.size() || !(is_space(b[pos]) || b[pos] == '#')) pgm_error(pos, "expected whitespace after magic");
  const long w = read_header_int(b, pos, "width");
  const long h = read_header_int(b, pos, "height");
  const std::size_t maxval_at = (skip_separators(b, pos), pos);
  const long maxval = read_header_int(b, pos, "maxval");
  if (maxval != 255) pgm_error(maxval_at, "maxval must be 255, got " + std::to_string(maxval));
  if (pos >= b.size() || !is_space(b[pos])) pgm_error(pos, "expected single whitespace before payload");
  ++pos;
  if (w != spec.width || h != spec.height) {
    pgm_error(0, "dimensions " + std::to_string(w) + "x" + std::to_string(h) +
                     " do not match grid spec " + std::to_string(spec.width) + "x" +
                     std::to_string(spec.height));
  }
  const std::size_t payload = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (b.size() - pos < payload) {
    pgm_error(b.size(), "truncated payload: expected " + std::to_string(payload) + " bytes, got " +
                            std::to_string(b.size() - pos));
  }
  if (b.size() - pos > payload) pgm_error(pos + payload, "trailing data after payload");
  BEVGrid g(spec);
  std::copy(b.begin() + static_cast<std::ptrdiff_t>(pos), b.end(), g.intensity.begin());
  return g;
}

std::filesystem::path sidecar_path(const std::filesystem::path& pgm_path) {
  std::filesystem::path p = pgm_path;
  p.replace_extension(".grid");
  return p;
}

std::string grid_spec_to_text(const GridSpec& spec) {
  return "x_min=" + shortest(spec.x_min) + "\nx_max=" + shortest(spec.x_max) +
         "\ny_min=" + shortest(spec.y_min) + "\ny_max=" + shortest(spec.y_max) +
         "\nwidth=" + std::to_string(spec.width) + "\nheight=" + std::to_string(spec.height) + "\n";
}

GridSpec grid_spec_from_text(std::string_view text) {
  std::map<std::string, std::string, std::less<>> kv;
  for (std::string_view line : split(text, '\n')) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(ErrorCode::kFormat, "grid sidecar: expected key=value");
    kv[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
  }
  auto get = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) fail(ErrorCode::kFormat, std::string("grid sidecar: missing ") + key);
    return it->second;
  };
  GridSpec s;
  s.x_min = parse_double(get("x_min"));
  s.x_max = parse_double(get("x_max"));
  s.y_min = parse_double(get("y_min"));
  s.y_max = parse_double(get("y_max"));
  s.width = static_cast<int>(parse_int(get("width")));
  s.height = static_cast<int>(parse_int(get("height")));
  s.check();
  return s;
}

void write_grid_spec(const GridSpec& spec, const std::filesystem::path& path) {
  write_text_file(path, grid_spec_to_text(spec));
}

GridSpec read_grid_spec(const std::filesystem::path& path) {
  return grid_spec_from_text(read_text_file(path));
}

void write_pgm(const BEVGrid& grid, const std::filesystem::path& path) {
  write_text_file(path, encode_pgm(grid));
  write_grid_spec(grid.spec, sidecar_path(path));
}

BEVGrid read_pgm(const std::filesystem::path& path) {
  return read_pgm(path, read_grid_spec(sidecar_path(path)));
}

BEVGrid read_pgm(const std::filesystem::path& path, const GridSpec& spec) {
  const std::string bytes = read_text_file(path);
  try {
    return decode_pgm(bytes, spec);
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace hyperdet::bev
