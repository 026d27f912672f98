#include <gtest/gtest.h>

#include <atomic>

#include "hyperdet/io.hpp"
#include "hyperdet/pipeline.hpp"
#include "test_util.hpp"

using namespace hyperdet;
using namespace hyperdet::pipeline;

namespace {

PipelineConfig small(const std::string& name, int jobs = 2) {
  PipelineConfig c;
  c.out_dir = hdtest::scratch_dir(name);
  c.synth.num_keyframes = 4;
  c.synth.num_objects = 6;
  c.jobs = jobs;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(Pipeline, FullChainWritesEveryArtifact) {
  const PipelineConfig c = small("pipe_chain");
  const std::string report = run_all(c);
  const Layout l(c);
  EXPECT_TRUE(fs::exists(l.scene()));
  EXPECT_TRUE(fs::exists(l.gt()));
  for (std::size_t f = 0; f < 4; ++f) {
    for (const fs::path& p : {l.lidar(f), l.boxes(f), l.fused(f), l.fused_raw(f), l.validated(f), l.keep(f),
                              l.validation_summary(f), l.bev(f), l.target(f), l.target_mask(f), l.target_pgm(f),
                              l.enhanced(f), l.hyper(f), l.deraster(f)}) {
      EXPECT_TRUE(fs::exists(p)) << p;
    }
    EXPECT_TRUE(fs::exists(bev::sidecar_path(l.bev(f))));
  }
  EXPECT_TRUE(fs::exists(l.geom_report()));
  EXPECT_TRUE(fs::exists(l.fg_report()));
  EXPECT_FALSE(fs::exists(l.det_report()));
  EXPECT_TRUE(fs::exists(l.manifest()));
  EXPECT_NE(report.find("total"), std::string::npos);

  // Validated clouds are subsets of the fused clouds, in order.
  const PointCloud fused = read_cloud_csv(l.fused(0));
  const PointCloud valid = read_cloud_csv(l.validated(0));
  EXPECT_LE(valid.size(), fused.size());
  std::size_t j = 0;
  for (const RadarPoint& p : fused.points) {
    if (j < valid.size() && valid.points[j] == p) ++j;
  }
  EXPECT_EQ(j, valid.size());

  // Passthrough hyper cloud sits on the occupied cells of the condition map.
  const bev::BEVGrid cond = bev::read_pgm(l.bev(0));
  const auto hyper = enhance::read_hyper_csv(l.hyper(0));
  EXPECT_EQ(hyper.size(), cond.count_at_least(60));
}

TEST(Pipeline, StagesRerunIndividuallyAndDeterministically) {
  PipelineConfig a = small("pipe_det_a", 1);
  PipelineConfig b = small("pipe_det_b", 4);
  run_all(a);
  run_all(b);
  EXPECT_EQ(build_manifest(a.out_dir), build_manifest(b.out_dir));
  const std::string before = read_text_file(Layout(a).validated(2));
  run_stage("validate", a);
  EXPECT_EQ(read_text_file(Layout(a).validated(2)), before);
  EXPECT_EQ(read_text_file(Layout(a).manifest()), build_manifest(a.out_dir));
}

TEST(Pipeline, ManifestFormat) {
  const auto dir = hdtest::scratch_dir("pipe_manifest");
  write_text_file(dir / "b.txt", "abc");
  write_text_file(dir / "a" / "x.txt", "");
  write_text_file(dir / "work" / "skip.txt", "zzz");
  const std::string m = write_manifest(dir);
  EXPECT_EQ(m,
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855  a/x.txt\n"
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad  b.txt\n");
  EXPECT_EQ(build_manifest(dir), m);
}

TEST(Pipeline, MissingUpstreamArtifact) {
  const PipelineConfig c = small("pipe_missing");
  try {
    run_stage("fuse", c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingArtifact);
    EXPECT_NE(std::string(e.what()).find("scene.json"), std::string::npos) << e.what();
  }
  run_stage("synth", c);
  run_stage("fuse", c);
  try {
    run_stage("rasterize", c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingArtifact);
    EXPECT_NE(std::string(e.what()).find("f0000"), std::string::npos) << e.what();
  }
  EXPECT_HD_ERROR(run_stage("train", c), ErrorCode::kInvalidArgument);
}

TEST(Pipeline, FrameSubset) {
  const PipelineConfig c = small("pipe_subset");
  StageOptions opt;
  opt.frames = {1, 3};
  run_stage("synth", c);
  run_stage("fuse", c, opt);
  const Layout l(c);
  EXPECT_FALSE(fs::exists(l.fused(0)));
  EXPECT_TRUE(fs::exists(l.fused(1)));
  EXPECT_FALSE(fs::exists(l.fused(2)));
  EXPECT_TRUE(fs::exists(l.fused(3)));
  opt.frames = {9};
  EXPECT_HD_ERROR(run_stage("fuse", c, opt), ErrorCode::kInvalidArgument);
}

TEST(Pipeline, OracleDetectionEvalScoresOne) {
  PipelineConfig c = small("pipe_det");
  run_all(c);
  c.pred_path = Layout(c).gt();
  const std::string report = run_stage("eval-det", c);
  EXPECT_NE(report.find("mAP 1.0000"), std::string::npos) << report;
  EXPECT_TRUE(fs::exists(Layout(c).det_report()));
}

TEST(Ablation, AxesParse) {
  const AblationAxes a = parse_axes("no-accumulation, no-validation,enhancer=passthrough|oracle,threshold=60|200");
  EXPECT_TRUE(a.no_accumulation);
  EXPECT_TRUE(a.no_validation);
  EXPECT_EQ(a.enhancers.size(), 2u);
  EXPECT_EQ(a.thresholds, (std::vector<int>{60, 200}));
  EXPECT_HD_ERROR(parse_axes("threshold=300"), ErrorCode::kConfig);
  EXPECT_HD_ERROR(parse_axes("no-diffusion"), ErrorCode::kConfig);
  const AblationAxes none = parse_axes("");
  EXPECT_FALSE(none.no_accumulation || none.no_validation);
}

TEST(Ablation, RowsAndValidationEffect) {
  PipelineConfig c = small("pipe_ablation");
  c.synth.ghosts_per_sweep = 4;
  c.synth.clutter_per_sweep = 4;
  const auto rows = run_ablation(c, parse_axes("no-accumulation,no-validation"));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_TRUE(rows[0].accumulation && rows[0].validation);
  const AblationRow& base = rows[0];
  const AblationRow& noval = rows[1];
  const AblationRow& noacc = rows[2];
  EXPECT_FALSE(noval.validation);
  EXPECT_EQ(noval.validated_points, noval.fused_points);
  EXPECT_EQ(noval.fused_points, base.fused_points);
  EXPECT_GT(noval.surviving_ghost + noval.surviving_clutter, base.surviving_ghost + base.surviving_clutter);
  EXPECT_LT(noacc.fused_points, base.fused_points);
  const std::string csv = read_text_file(c.out_dir / "ablation.csv");
  EXPECT_EQ(csv, ablation_csv(rows));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(Ablation, SingleAndThresholdRows) {
  PipelineConfig c = small("pipe_ablation_thr");
  EXPECT_EQ(run_ablation(c, {}).size(), 1u);
  const auto rows = run_ablation(c, parse_axes("threshold=60|200"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].threshold, 60);
  EXPECT_EQ(rows[1].threshold, 200);
}

TEST(Parallel, RunsEveryIndexAndRethrowsLowest) {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(100, 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  for (int jobs : {1, 3, 8}) {
    try {
      parallel_for(50, jobs, [](std::size_t i) {
        if (i == 7 || i == 31) fail(ErrorCode::kIo, "index " + std::to_string(i));
      });
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(std::string(e.what()).find("index 7") != std::string::npos, true) << e.what();
    }
  }
}
