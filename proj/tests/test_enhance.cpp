#include <gtest/gtest.h>

#include <fstream>

#include "hyperdet/bev.hpp"
#include "hyperdet/enhance.hpp"
#include "hyperdet/io.hpp"
#include "test_util.hpp"

using namespace hyperdet;
using namespace hyperdet::enhance;
using hdtest::Rng;

namespace {

bev::GridSpec small_spec() { return {-8, 8, -8, 8, 32, 32}; }

bev::BEVGrid sparse_grid(Rng& rng, const bev::GridSpec& s, int n) {
  bev::BEVGrid g(s);
  for (int i = 0; i < n; ++i) g.at(rng.integer(0, s.height - 1), rng.integer(0, s.width - 1)) = 255;
  return g;
}

std::filesystem::path write_script(const std::filesystem::path& dir, const std::string& name,
                                   const std::string& body) {
  const auto path = dir / name;
  write_text_file(path, "#!/bin/sh\n" + body + "\n");
  std::filesystem::permissions(path, std::filesystem::perms::owner_all);
  return path;
}

// O(n*m) scan; ties go to the lowest index.
std::size_t nearest_xy(const PointCloud& c, double x, double y) {
  std::size_t best = 0;
  double best_d = 1e300;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double dx = c.points[i].x - x, dy = c.points[i].y - y;
    const double d = dx * dx + dy * dy;
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace

TEST(Enhancer, NamesRoundTrip) {
  for (EnhancerKind k : {EnhancerKind::kPassthrough, EnhancerKind::kOracle, EnhancerKind::kExternal}) {
    EXPECT_EQ(parse_enhancer(enhancer_name(k)), k);
  }
  EXPECT_HD_ERROR(parse_enhancer("diffusion"), ErrorCode::kConfig);
}

TEST(Enhancer, PassthroughAndOracle) {
  Rng rng(71);
  const auto cond = sparse_grid(rng, small_spec(), 20);
  const auto target = sparse_grid(rng, small_spec(), 60);
  EXPECT_EQ(enhance::enhance(cond, {}), cond);
  EnhancerSpec oracle{EnhancerKind::kOracle, "", {}};
  EXPECT_EQ(enhance::enhance(cond, oracle, &target), target);
  EXPECT_HD_ERROR(enhance::enhance(cond, oracle), ErrorCode::kInvalidArgument);
  const bev::BEVGrid other(bev::GridSpec{});
  EXPECT_HD_ERROR(enhance::enhance(cond, oracle, &other), ErrorCode::kInvalidArgument);
}

TEST(Enhancer, ExternalCopyProtocol) {
  Rng rng(72);
  const auto dir = hdtest::scratch_dir("ext_copy");
  const auto script = write_script(dir, "copy.sh", "cp \"$1\" \"$2\"");
  const auto cond = sparse_grid(rng, small_spec(), 30);
  EnhancerSpec spec{EnhancerKind::kExternal, script.string(), dir / "work"};
  EXPECT_EQ(enhance::enhance(cond, spec), cond);
  spec.external_cmd = "cp {in} {out}";
  EXPECT_EQ(enhance::enhance(cond, spec), cond);
}

TEST(Enhancer, ExternalDilateReference) {
  if (std::system("python3 -c pass >/dev/null 2>&1") != 0) GTEST_SKIP() << "python3 not available";
  bev::BEVGrid cond(small_spec());
  cond.at(10, 10) = 255;
  cond.at(0, 31) = 255;
  const auto dir = hdtest::scratch_dir("ext_dilate");
  EnhancerSpec spec{EnhancerKind::kExternal,
                    "python3 " + (std::filesystem::path(HD_SOURCE_DIR) / "tools/enhancers/dilate.py").string(),
                    dir};
  const auto out = enhance::enhance(cond, spec);
  EXPECT_EQ(out.count_at_least(255), 9u + 4u);
  for (int r = 9; r <= 11; ++r) {
    for (int c = 9; c <= 11; ++c) EXPECT_EQ(out.at(r, c), 255);
  }
}

TEST(Enhancer, ExternalFailuresAreReported) {
  Rng rng(73);
  const auto dir = hdtest::scratch_dir("ext_fail");
  const auto cond = sparse_grid(rng, small_spec(), 5);
  EnhancerSpec spec{EnhancerKind::kExternal, "", dir / "work"};
  EXPECT_HD_ERROR(enhance::enhance(cond, spec), ErrorCode::kConfig);

  spec.external_cmd = write_script(dir, "fail.sh", "echo boom >&2; exit 3").string();
  try {
    enhance::enhance(cond, spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kExternalEnhancer);
    EXPECT_NE(std::string(e.what()).find("boom"), std::string::npos) << e.what();
  }

  spec.external_cmd = write_script(dir, "noop.sh", "exit 0").string();
  EXPECT_HD_ERROR(enhance::enhance(cond, spec), ErrorCode::kExternalEnhancer);

  spec.external_cmd = write_script(dir, "small.sh", "printf 'P5\\n2 2\\n255\\nabcd' > \"$2\"").string();
  EXPECT_HD_ERROR(enhance::enhance(cond, spec), ErrorCode::kExternalEnhancer);

  spec.external_cmd = write_script(dir, "p2.sh", "printf 'P2\\n32 32\\n255\\n' > \"$2\"").string();
  EXPECT_HD_ERROR(enhance::enhance(cond, spec), ErrorCode::kExternalEnhancer);
}

TEST(Lift, MatchesBruteForceNearestNeighbor) {
  Rng rng(74);
  PointCloud validated = rng.cloud(2000, "reference", 3, 40);
  std::vector<bev::ForegroundPixel> fg;
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p = rng.vec2(-45, 45);
    fg.push_back({p.x(), p.y(), rng.uniform(0.2, 1.0)});
  }
  const HyperCloud h = lift_attributes(fg, validated);
  ASSERT_EQ(h.size(), fg.size());
  EXPECT_EQ(h.frame_id, "reference");
  for (std::size_t i = 0; i < fg.size(); ++i) {
    const std::size_t src = nearest_xy(validated, fg[i].x, fg[i].y);
    const HyperPoint& p = h.points[i];
    EXPECT_EQ(p.source_index, src);
    EXPECT_EQ(p.point.x, fg[i].x);
    EXPECT_EQ(p.point.y, fg[i].y);
    EXPECT_EQ(p.point.z, validated.points[src].z);
    EXPECT_EQ(p.point.rcs, validated.points[src].rcs);
    EXPECT_EQ(p.point.doppler, validated.points[src].doppler);
    EXPECT_EQ(p.point.t, validated.points[src].t);
    EXPECT_EQ(p.point.sensor_id, kLiftedSensor);
    EXPECT_EQ(p.confidence, fg[i].confidence);
  }
}

TEST(Lift, CoincidentAndSingleSource) {
  PointCloud v;
  v.frame_id = "reference";
  RadarPoint a;
  a.set_position({1, 2, 3});
  a.rcs = 7;
  a.doppler = -2;
  v.points = {a};
  const std::vector<bev::ForegroundPixel> fg = {{1, 2, 1.0}, {-40, 30, 0.5}};
  const HyperCloud h = lift_attributes(fg, v);
  for (const HyperPoint& p : h.points) {
    EXPECT_EQ(p.point.z, 3);
    EXPECT_EQ(p.point.rcs, 7);
    EXPECT_EQ(p.source_index, 0u);
  }
  EXPECT_HD_ERROR(lift_attributes(fg, PointCloud{}), ErrorCode::kInvalidArgument);
}

TEST(Assemble, CountsAndUnion) {
  Rng rng(75);
  const auto spec = small_spec();
  PointCloud validated = rng.cloud(50, "reference", 1, 7);
  bev::BEVGrid g(spec);
  g.at(1, 1) = 59;
  g.at(2, 2) = 60;
  g.at(3, 3) = 200;
  const HyperCloud h = assemble_hyper_cloud(g, validated, 60);
  EXPECT_EQ(h.size(), 2u);
  const HyperCloud u = assemble_hyper_cloud(g, validated, 60, true);
  ASSERT_EQ(u.size(), 52u);
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(u.points[i].point, validated.points[i]);
    EXPECT_EQ(u.points[i].source_index, i);
  }
  EXPECT_EQ(assemble_hyper_cloud(bev::BEVGrid(spec), PointCloud{}, 60).size(), 0u);
}

TEST(HyperCsv, RoundTrip) {
  Rng rng(76);
  PointCloud validated = rng.cloud(30, "reference", 1, 7);
  const HyperCloud h = assemble_hyper_cloud(bev::rasterize(rng.cloud(40, "reference", 0, 7), small_spec()).grid,
                                            validated, 60, true);
  const auto dir = hdtest::scratch_dir("hyper_csv");
  write_hyper_csv(h, dir / "h.csv");
  const HyperCloud back = read_hyper_csv(dir / "h.csv");
  EXPECT_EQ(back.frame_id, h.frame_id);
  ASSERT_EQ(back.size(), h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    EXPECT_EQ(back.points[i].point, h.points[i].point);
    EXPECT_EQ(back.points[i].confidence, h.points[i].confidence);
    EXPECT_EQ(back.points[i].source_index, h.points[i].source_index);
  }
  EXPECT_EQ(h.to_point_cloud().size(), h.size());
}
