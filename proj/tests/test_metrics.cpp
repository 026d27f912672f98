#include <gtest/gtest.h>

#include <algorithm>
#include <regex>

#include "hyperdet/io.hpp"
#include "hyperdet/metrics.hpp"
#include "test_util.hpp"

using namespace hyperdet;
using namespace hyperdet::metrics;
using hdtest::Rng;

namespace {

std::vector<Vec2> random_set(Rng& rng, std::size_t n, double extent = 20) {
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(rng.vec2(-extent, extent));
  return out;
}

double min_sq(const Vec2& p, const std::vector<Vec2>& s) {
  double best = 1e300;
  for (const Vec2& q : s) {
    const double dx = p.x() - q.x(), dy = p.y() - q.y();
    best = std::min(best, dx * dx + dy * dy);
  }
  return best;
}

double brute_chamfer(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  double sa = 0, sb = 0;
  for (const Vec2& p : a) sa += min_sq(p, b);
  for (const Vec2& p : b) sb += min_sq(p, a);
  return sa / a.size() + sb / b.size();
}

double brute_hausdorff(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  double h = 0;
  for (const Vec2& p : a) h = std::max(h, min_sq(p, b));
  for (const Vec2& p : b) h = std::max(h, min_sq(p, a));
  return std::sqrt(h);
}

double brute_fscore(const std::vector<Vec2>& a, const std::vector<Vec2>& b, double tau) {
  double tp_a = 0, tp_b = 0;
  for (const Vec2& p : a) tp_a += std::sqrt(min_sq(p, b)) <= tau ? 1 : 0;
  for (const Vec2& p : b) tp_b += std::sqrt(min_sq(p, a)) <= tau ? 1 : 0;
  const double pr = tp_a / a.size(), rc = tp_b / b.size();
  return pr + rc > 0 ? 2 * pr * rc / (pr + rc) : 0.0;
}

Detection det(const std::string& frame, Category c, double x, double y, double score = 1.0) {
  Detection d;
  d.frame_id = frame;
  d.category = c;
  d.center = {x, y, 1};
  d.score = score;
  return d;
}

std::vector<Detection> gt_scene(Rng& rng, int frames, int per_frame) {
  std::vector<Detection> out;
  for (int f = 0; f < frames; ++f) {
    for (int i = 0; i < per_frame; ++i) {
      const Category c = kAllCategories[static_cast<std::size_t>(rng.integer(0, 6))];
      const Vec2 p = rng.vec2(-40, 40);
      out.push_back(det("f" + std::to_string(f), c, p.x(), p.y()));
    }
  }
  return out;
}

PointCloud points_at(std::initializer_list<Vec3> ps) {
  PointCloud c;
  c.frame_id = "reference";
  for (const Vec3& p : ps) {
    RadarPoint r;
    r.set_position(p);
    c.points.push_back(r);
  }
  return c;
}

}  // namespace

TEST(Geometry, SinglePairExamples) {
  const std::vector<Vec2> a = {{0, 0}}, b = {{3, 4}};
  EXPECT_DOUBLE_EQ(chamfer(a, b), 50.0);
  EXPECT_DOUBLE_EQ(chamfer(a, b, true), 10.0);
  EXPECT_DOUBLE_EQ(hausdorff(a, b), 5.0);
  EXPECT_DOUBLE_EQ(fscore(a, b, 4.9), 0.0);
  EXPECT_DOUBLE_EQ(fscore(a, b, 5.0), 1.0);
}

TEST(Geometry, IdenticalSetsAreZeroDistanceFullScore) {
  Rng rng(81);
  const auto a = random_set(rng, 100);
  EXPECT_EQ(chamfer(a, a), 0.0);
  EXPECT_EQ(hausdorff(a, a), 0.0);
  EXPECT_EQ(fscore(a, a, 1e-9), 1.0);
}

TEST(Geometry, MatchesBruteForce) {
  Rng rng(82);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_set(rng, static_cast<std::size_t>(rng.integer(1, 300)));
    const auto b = random_set(rng, static_cast<std::size_t>(rng.integer(1, 300)));
    const double tau = rng.uniform(0.1, 3);
    EXPECT_NEAR(chamfer(a, b), brute_chamfer(a, b), 1e-9 * (1 + brute_chamfer(a, b)));
    EXPECT_DOUBLE_EQ(hausdorff(a, b), brute_hausdorff(a, b));
    EXPECT_DOUBLE_EQ(fscore(a, b, tau), brute_fscore(a, b, tau));
  }
}

TEST(Geometry, SymmetricAndFscoreMonotone) {
  Rng rng(83);
  const auto a = random_set(rng, 150), b = random_set(rng, 220);
  EXPECT_DOUBLE_EQ(chamfer(a, b), chamfer(b, a));
  EXPECT_DOUBLE_EQ(hausdorff(a, b), hausdorff(b, a));
  EXPECT_DOUBLE_EQ(fscore(a, b, 1.0), fscore(b, a, 1.0));
  double prev = 0;
  for (double tau = 0.05; tau < 6; tau += 0.05) {
    const double f = fscore(a, b, tau);
    EXPECT_GE(f, prev);
    prev = f;
  }
}

TEST(Geometry, SubsetHasZeroDirectedTerm) {
  Rng rng(84);
  const auto b = random_set(rng, 100);
  const std::vector<Vec2> a(b.begin(), b.begin() + 30);
  const GeomReport r = geometry_report(a, b, 0.01);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.chamfer, brute_chamfer(a, b));
  double directed_b = 0;
  for (const Vec2& p : b) directed_b += min_sq(p, a);
  EXPECT_NEAR(r.chamfer, directed_b / b.size(), 1e-12);
}

TEST(Geometry, EmptySetsRejected) {
  const std::vector<Vec2> a = {{0, 0}}, empty;
  EXPECT_HD_ERROR(chamfer(a, empty), ErrorCode::kInvalidArgument);
  EXPECT_HD_ERROR(hausdorff(empty, a), ErrorCode::kInvalidArgument);
  EXPECT_HD_ERROR(fscore(a, a, 0.0), ErrorCode::kInvalidArgument);
}

TEST(FgBoost, EnhancedEqualsRawGivesZero) {
  Box3D car;
  car.size = {4, 2, 2};
  FgFrame f{points_at({{0, 0, 0}, {1, 0, 0}}), points_at({{0, 0, 0}, {1, 0, 0}}), {car}};
  const std::vector<FgFrame> frames = {f};
  const std::vector<Category> cats = {Category::kCar};
  const auto rows = fg_boost_report(frames, cats);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].raw_avg, 2.0);
  EXPECT_EQ(rows[0].added_avg, 0.0);
  ASSERT_TRUE(rows[0].boost);
  EXPECT_EQ(*rows[0].boost, 0.0);
  EXPECT_EQ(rows[1].name, "total");
}

TEST(FgBoost, MeanOfPerFrameRatiosSkippingZeroRaw) {
  Box3D car;
  car.size = {10, 10, 10};
  const std::vector<FgFrame> frames = {
      {points_at({{0, 0, 0}, {1, 0, 0}}), points_at({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}, {4, 0, 0}, {0, 1, 0}}), {car}},
      {points_at({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}}), points_at({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}, {4, 0, 0}, {0, 1, 0}}), {car}},
      {points_at({}), points_at({{0, 0, 0}}), {car}},
  };
  const std::vector<Category> cats = {Category::kCar, Category::kPedestrian};
  const auto rows = fg_boost_report(frames, cats);
  EXPECT_EQ(rows[0].frames, 3u);
  EXPECT_DOUBLE_EQ(rows[0].raw_avg, 2.0);
  EXPECT_DOUBLE_EQ(rows[0].added_avg, 7.0 / 3.0);
  // Per-frame ratios 2.0 and 0.5; the zero-raw frame is left out.
  EXPECT_DOUBLE_EQ(*rows[0].boost, 1.25);
  EXPECT_EQ(rows[1].frames, 0u);
  EXPECT_FALSE(rows[1].boost);
  const std::string csv = fg_report_csv(rows);
  EXPECT_NE(csv.find("pedestrian,0,0.000000,0.000000,n/a"), std::string::npos) << csv;
}

TEST(FgBoost, PublishedCarRowIsNotRatioOfMeans) {
  const std::string paper = read_text_file(std::filesystem::path(HD_SOURCE_DIR) / "paper.md");
  std::smatch m;
  ASSERT_TRUE(std::regex_search(paper, m, std::regex(R"(Car\s*&\s*([\d.]+)\s*&\s*\+([\d.]+)\s*&\s*([\d.]+))")));
  const double raw = std::stod(m[1]), added = std::stod(m[2]), boost = std::stod(m[3]) / 100.0;
  EXPECT_DOUBLE_EQ(raw, 6.13);
  EXPECT_DOUBLE_EQ(added, 11.71);
  EXPECT_DOUBLE_EQ(boost, 1.8547);
  EXPECT_NEAR(added / raw, 1.9103, 1e-4);
  EXPECT_GT(std::abs(added / raw - boost), 0.05);
}

TEST(Ap, PerfectPredictionsScoreOne) {
  Rng rng(85);
  const auto gts = gt_scene(rng, 5, 20);
  DetEvalConfig cfg;
  const MapReport r = map_score(gts, gts, cfg);
  EXPECT_DOUBLE_EQ(r.map, 1.0);
  cfg.method = ApMethod::kInterp101;
  EXPECT_DOUBLE_EQ(map_score(gts, gts, cfg).map, 1.0);
}

TEST(Ap, EmptyAndShiftedPredictionsScoreZero) {
  Rng rng(86);
  const auto gts = gt_scene(rng, 3, 15);
  DetEvalConfig cfg;
  for (double d : cfg.dist_thresholds) {
    EXPECT_EQ(*average_precision({}, gts, d, gts[0].category, cfg), 0.0);
  }
  auto shifted = gts;
  for (auto& d : shifted) d.center.x() += 5.0;
  EXPECT_EQ(map_score(shifted, gts, cfg).map, 0.0);
}

TEST(Ap, NuScenesArithmetic) {
  // One GT, two predictions: the higher-scored one is a false positive.
  // Curve: (r=0, p=0), (r=1, p=0.5). Interpolated precision at r is r/2.
  const std::vector<Detection> gts = {det("f", Category::kCar, 0, 0)};
  const std::vector<Detection> preds = {det("f", Category::kCar, 10, 0, 0.9), det("f", Category::kCar, 0, 0, 0.8)};
  DetEvalConfig cfg;
  double expect = 0;
  for (int i = 11; i <= 100; ++i) expect += std::max(i / 200.0 - 0.1, 0.0);
  expect = expect / 90 / 0.9;
  EXPECT_NEAR(*average_precision(preds, gts, 1.0, Category::kCar, cfg), expect, 1e-12);
  cfg.method = ApMethod::kInterp101;
  EXPECT_NEAR(*average_precision(preds, gts, 1.0, Category::kCar, cfg), 0.5, 1e-12);
}

TEST(Ap, MonotoneInDistanceThreshold) {
  Rng rng(87);
  const auto gts = gt_scene(rng, 6, 25);
  std::vector<Detection> preds;
  for (const auto& g : gts) {
    Detection p = g;
    p.center.head<2>() += rng.vec2(-2.5, 2.5);
    p.score = rng.uniform(0, 1);
    preds.push_back(p);
    if (rng.uniform(0, 1) < 0.3) {
      Detection fp = g;
      fp.center.head<2>() = rng.vec2(-45, 45);
      fp.score = rng.uniform(0, 1);
      preds.push_back(fp);
    }
  }
  DetEvalConfig cfg;
  for (Category c : kAllCategories) {
    double prev = -1;
    for (double d : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
      const auto ap = average_precision(preds, gts, d, c, cfg);
      if (!ap) break;
      EXPECT_GE(*ap, prev - 1e-12);
      EXPECT_GE(*ap, 0.0);
      EXPECT_LE(*ap, 1.0);
      prev = *ap;
    }
  }
}

TEST(Ap, RangeFilterAndMissingCategoryWarning) {
  const std::vector<Detection> gts = {det("f", Category::kCar, 0, 0), det("f", Category::kTruck, 60, 0)};
  DetEvalConfig cfg;
  const MapReport r = map_score(gts, gts, cfg);
  EXPECT_EQ(r.ap.size(), 1u);
  EXPECT_EQ(r.warnings.size(), 6u);
  EXPECT_NE(r.warnings[0].find("truck"), std::string::npos);
  EXPECT_NE(map_report_table(r, cfg).find("mAP 1.0000"), std::string::npos);
}

TEST(Ap, PermutationInvariantForDistinctScores) {
  Rng rng(88);
  const auto gts = gt_scene(rng, 4, 20);
  std::vector<Detection> preds;
  for (const auto& g : gts) {
    Detection p = g;
    p.center.head<2>() += rng.vec2(-1.5, 1.5);
    p.score = rng.uniform(0, 1);
    preds.push_back(p);
  }
  const DetEvalConfig cfg;
  const double base = map_score(preds, gts, cfg).map;
  std::shuffle(preds.begin(), preds.end(), rng.gen);
  EXPECT_EQ(map_score(preds, gts, cfg).map, base);
}

TEST(Ap, ConfigChecks) {
  DetEvalConfig cfg;
  cfg.dist_thresholds = {2, 1};
  EXPECT_HD_ERROR(cfg.check(), ErrorCode::kConfig);
  cfg.dist_thresholds = {};
  EXPECT_HD_ERROR(cfg.check(), ErrorCode::kConfig);
}

TEST(Jsonl, DetectionsAndBoxesRoundTrip) {
  Rng rng(89);
  const auto dets = gt_scene(rng, 2, 5);
  const auto back = detections_from_jsonl(detections_to_jsonl(dets), "mem");
  ASSERT_EQ(back.size(), dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    EXPECT_EQ(back[i].frame_id, dets[i].frame_id);
    EXPECT_EQ(back[i].category, dets[i].category);
    EXPECT_EQ(back[i].center, dets[i].center);
    EXPECT_EQ(back[i].score, dets[i].score);
  }
  std::vector<Box3D> boxes(3);
  for (int i = 0; i < 3; ++i) {
    boxes[i].id = i;
    boxes[i].center = rng.vec3(-5, 5);
    boxes[i].yaw = rng.uniform(-3, 3);
    boxes[i].velocity = rng.vec2(-3, 3);
    boxes[i].category = Category::kTrailer;
  }
  const auto bb = boxes_from_jsonl(boxes_to_jsonl(boxes, "f0"), "mem");
  ASSERT_EQ(bb.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(bb[i].id, i);
    EXPECT_EQ(bb[i].center, boxes[i].center);
    EXPECT_EQ(bb[i].yaw, boxes[i].yaw);
    EXPECT_EQ(bb[i].velocity, boxes[i].velocity);
    EXPECT_EQ(bb[i].category, Category::kTrailer);
  }
  EXPECT_HD_ERROR(detections_from_jsonl("{\"frame_id\": 1}\n", "mem"), ErrorCode::kFormat);
  EXPECT_HD_ERROR(detections_from_jsonl("not json\n", "mem"), ErrorCode::kFormat);
}
