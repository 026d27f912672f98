#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "hyperdet/bev.hpp"
#include "hyperdet/io.hpp"
#include "test_util.hpp"

using namespace hyperdet;
using namespace hyperdet::bev;
using hdtest::Rng;

namespace {

PointCloud cloud_of(std::initializer_list<Vec2> xy) {
  PointCloud c;
  c.frame_id = "reference";
  for (const Vec2& p : xy) {
    RadarPoint r;
    r.x = p.x();
    r.y = p.y();
    c.points.push_back(r);
  }
  return c;
}

}  // namespace

TEST(Grid, DefaultResolution) {
  const GridSpec s;
  EXPECT_DOUBLE_EQ(s.resolution(), 100.0 / 512.0);
  s.check();
  GridSpec bad = s;
  bad.height = 256;
  EXPECT_HD_ERROR(bad.check(), ErrorCode::kConfig);
}

TEST(Grid, PixelExamples) {
  const GridSpec s;
  const auto a = pixel_of(s, -50, -50);
  ASSERT_TRUE(a);
  EXPECT_EQ(a->row, 0);
  EXPECT_EQ(a->col, 0);
  const auto b = pixel_of(s, 0, 0);
  ASSERT_TRUE(b);
  EXPECT_EQ(b->row, 256);
  EXPECT_EQ(b->col, 256);
  const auto c = pixel_of(s, 49.9999, -0.0001);
  ASSERT_TRUE(c);
  EXPECT_EQ(c->col, 511);
  EXPECT_EQ(c->row, 255);
  EXPECT_FALSE(pixel_of(s, 50, 0));
  EXPECT_FALSE(pixel_of(s, 0, 50));
  EXPECT_FALSE(pixel_of(s, -50.0001, 0));
}

TEST(Grid, PixelMatchesFloorOracle) {
  const GridSpec s;
  Rng rng(51);
  const double res = 100.0 / 512.0;
  for (int i = 0; i < 10000; ++i) {
    const Vec2 p = rng.vec2(-50, 50);
    const auto px = pixel_of(s, p.x(), p.y());
    ASSERT_TRUE(px);
    const int col = static_cast<int>(std::floor((p.x() + 50) / res));
    const int row = static_cast<int>(std::floor((p.y() + 50) / res));
    EXPECT_EQ(px->col, std::min(col, 511));
    EXPECT_EQ(px->row, std::min(row, 511));
    const Vec2 c = pixel_center(s, px->row, px->col);
    EXPECT_LE((c - p).cwiseAbs().maxCoeff(), res / 2 + 1e-12);
  }
}

TEST(Rasterize, SkipsOutOfGridAndMarksOccupied) {
  const RasterResult r = rasterize(cloud_of({{0, 0}, {0.01, 0.01}, {50, 0}, {10, -20}}), GridSpec{});
  EXPECT_EQ(r.skipped, 1u);
  EXPECT_EQ(r.grid.count_at_least(1), 2u);
  EXPECT_EQ(r.grid.at(256, 256), 255);
}

TEST(Rasterize, OrderIndependent) {
  Rng rng(52);
  PointCloud c = rng.cloud(500, "reference", 0, 60);
  const BEVGrid a = rasterize(c, GridSpec{}).grid;
  std::reverse(c.points.begin(), c.points.end());
  std::shuffle(c.points.begin(), c.points.end(), rng.gen);
  EXPECT_EQ(rasterize(c, GridSpec{}).grid, a);
}

TEST(Rasterize, OccupiedPixelsEqualDistinctCells) {
  Rng rng(53);
  const GridSpec s;
  const PointCloud c = rng.cloud(3000, "reference", 0, 55);
  std::set<std::pair<int, int>> cells;
  std::size_t outside = 0;
  for (const auto& p : c.points) {
    const auto px = pixel_of(s, p.x, p.y);
    if (px) {
      cells.insert({px->row, px->col});
    } else {
      ++outside;
    }
  }
  const RasterResult r = rasterize(c, s);
  EXPECT_EQ(r.grid.count_at_least(1), cells.size());
  EXPECT_EQ(r.skipped, outside);
}

TEST(Threshold, InclusiveBoundary) {
  BEVGrid g(GridSpec{});
  g.at(0, 0) = 59;
  g.at(0, 1) = 60;
  g.at(0, 2) = 255;
  const BEVGrid t = threshold(g, 60);
  EXPECT_EQ(t.at(0, 0), 0);
  EXPECT_EQ(t.at(0, 1), 255);
  EXPECT_EQ(t.at(0, 2), 255);
  EXPECT_EQ(t.count_at_least(1), 2u);
  EXPECT_EQ(threshold(g, 0).count_at_least(255), g.intensity.size());
  const auto fg = derasterize(g, 60);
  ASSERT_EQ(fg.size(), 2u);
  EXPECT_DOUBLE_EQ(fg[0].confidence, 60.0 / 255.0);
}

TEST(Derasterize, RoundTripThroughRasterize) {
  Rng rng(54);
  const GridSpec s;
  const BEVGrid g = rasterize(rng.cloud(2000, "reference", 0, 49), s).grid;
  const auto fg = derasterize(g, 1);
  EXPECT_EQ(fg.size(), g.count_at_least(1));
  PointCloud back;
  for (const auto& p : fg) {
    RadarPoint r;
    r.x = p.x;
    r.y = p.y;
    back.points.push_back(r);
  }
  EXPECT_EQ(rasterize(back, s).grid, g);
}

TEST(Pgm, RoundTripAllByteValues) {
  GridSpec s;
  s.x_min = 0;
  s.x_max = 16;
  s.y_min = 0;
  s.y_max = 16;
  s.width = 16;
  s.height = 16;
  BEVGrid g(s);
  for (std::size_t i = 0; i < g.intensity.size(); ++i) g.intensity[i] = static_cast<std::uint8_t>(i);
  EXPECT_EQ(decode_pgm(encode_pgm(g), s), g);
  const auto dir = hdtest::scratch_dir("pgm");
  write_pgm(g, dir / "g.pgm");
  EXPECT_EQ(read_pgm(dir / "g.pgm"), g);
  EXPECT_EQ(read_grid_spec(dir / "g.grid"), s);
}

TEST(Pgm, FullGridPayloadSize) {
  BEVGrid g(GridSpec{});
  std::fill(g.intensity.begin(), g.intensity.end(), 0xFF);
  const std::string bytes = encode_pgm(g);
  EXPECT_EQ(bytes.rfind("P5\n512 512\n255\n", 0), 0u);
  EXPECT_EQ(bytes.size(), 15u + 262144u);
  EXPECT_TRUE(std::all_of(bytes.begin() + 15, bytes.end(), [](char c) { return c == '\xff'; }));
}

TEST(Pgm, HeaderCommentsAccepted) {
  GridSpec s{0, 2, 0, 2, 2, 2};
  const std::string bytes = std::string("P5 # c\n2 # w\n2\n255\n") + std::string("\x01\x02\x03\x04", 4);
  const BEVGrid g = decode_pgm(bytes, s);
  EXPECT_EQ(g.at(1, 1), 4);
}

TEST(Pgm, ErrorsReportByteOffset) {
  const GridSpec s{0, 2, 0, 2, 2, 2};
  auto expect_offset = [&](const std::string& bytes, const std::string& offset) {
    try {
      decode_pgm(bytes, s);
      ADD_FAILURE() << "accepted " << bytes;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kFormat);
      EXPECT_NE(std::string(e.what()).find("offset " + offset), std::string::npos) << e.what();
    }
  };
  expect_offset("P2\n2 2\n255\nabcd", "0");
  expect_offset("P5\n2 2\n65535\nabcd", "7");
  expect_offset("P5\n2 2\n255\nabc", "14");
  expect_offset("P5\n2 2\n255\nabcde", "15");
  expect_offset("P5\nx 2\n255\nabcd", "3");
  expect_offset("P5\n3 2\n255\nabcdef", "0");
}

TEST(Sidecar, TextRoundTripAndMissingKey) {
  GridSpec s{-12.5, 12.5, -25, 0, 100, 100};
  EXPECT_EQ(grid_spec_from_text(grid_spec_to_text(s)), s);
  EXPECT_HD_ERROR(grid_spec_from_text("x_min=0\n"), ErrorCode::kFormat);
  EXPECT_EQ(sidecar_path("a/b/f0001.pgm"), std::filesystem::path("a/b/f0001.grid"));
}
