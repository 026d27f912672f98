#pragma once

// Bird's-eye-view occupancy rasters. Cells are half-open: a point at
// x == x_max or y == y_max is outside the grid.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hyperdet/core.hpp"

namespace hyperdet::bev {

struct GridSpec {
  double x_min = -50.0;
  double x_max = 50.0;
  double y_min = -50.0;
  double y_max = 50.0;
  int width = 512;
  int height = 512;

  double resolution() const { return (x_max - x_min) / width; }
  /// Throws kConfig unless both axes share one resolution (1e-12 relative).
  void check() const;
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct PixelIndex {
  int row = 0;
  int col = 0;
};

/// Row 0 is the minimum-y row; storage is row-major.
struct BEVGrid {
  GridSpec spec;
  std::vector<std::uint8_t> intensity;

  BEVGrid() = default;
  explicit BEVGrid(const GridSpec& s)
      : spec(s), intensity(static_cast<std::size_t>(s.width) * s.height, 0) {}

  std::uint8_t at(int row, int col) const {
    return intensity[static_cast<std::size_t>(row) * spec.width + col];
  }
  std::uint8_t& at(int row, int col) {
    return intensity[static_cast<std::size_t>(row) * spec.width + col];
  }
  std::size_t count_at_least(std::uint8_t tau) const;
  friend bool operator==(const BEVGrid&, const BEVGrid&) = default;
};

/// Pixel containing (x, y), or nullopt when outside the half-open extent.
std::optional<PixelIndex> pixel_of(const GridSpec& spec, double x, double y);
Vec2 pixel_center(const GridSpec& spec, int row, int col);

struct RasterResult {
  BEVGrid grid;
  std::size_t skipped = 0;  // points outside the grid extent
};

RasterResult rasterize(const PointCloud& cloud, const GridSpec& spec);

/// 255 where intensity >= tau_int, else 0.
BEVGrid threshold(const BEVGrid& grid, std::uint8_t tau_int);

struct ForegroundPixel {
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;  // intensity / 255
};

/// One entry per pixel with intensity >= tau_int, in row-major order.
std::vector<ForegroundPixel> derasterize(const BEVGrid& grid, std::uint8_t tau_int);

/// Binary P5 PGM with maxval 255. Rows are stored in grid order.
std::string encode_pgm(const BEVGrid& grid);
/// Throws kFormat with the byte offset of the first problem.
BEVGrid decode_pgm(std::string_view bytes, const GridSpec& spec);

void write_pgm(const BEVGrid& grid, const std::filesystem::path& path);
/// Reads `path` using the geometry in its `.grid` sidecar.
BEVGrid read_pgm(const std::filesystem::path& path);
/// Reads `path` against an explicitly supplied geometry.
BEVGrid read_pgm(const std::filesystem::path& path, const GridSpec& spec);

/// `<name>.grid` next to `<name>.pgm`.
std::filesystem::path sidecar_path(const std::filesystem::path& pgm_path);
std::string grid_spec_to_text(const GridSpec& spec);
GridSpec grid_spec_from_text(std::string_view text);
void write_grid_spec(const GridSpec& spec, const std::filesystem::path& path);
GridSpec read_grid_spec(const std::filesystem::path& path);

}  // namespace hyperdet::bev
