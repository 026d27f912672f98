#include <gtest/gtest.h>

#include "hyperdet/config.hpp"
#include "hyperdet/io.hpp"
#include "test_util.hpp"

using namespace hyperdet;

namespace {

std::filesystem::path shipped() { return std::filesystem::path(HD_SOURCE_DIR) / "config/default.conf"; }

}  // namespace

TEST(Config, ShippedFileEqualsBuiltInDefaults) {
  PipelineConfig from_file;
  load_config_file(from_file, shipped());
  EXPECT_EQ(config_to_text(from_file), config_to_text(PipelineConfig{}));
}

TEST(Config, ShippedFileCarriesPublishedSettings) {
  PipelineConfig c;
  load_config_file(c, shipped());
  EXPECT_EQ(c.window.window_seconds, 0.5);
  EXPECT_EQ(c.window.sweep_count(), 11u);
  EXPECT_EQ(c.validation.tau_d, 10.0);
  EXPECT_EQ(c.validation.r, 1.0);
  EXPECT_EQ(c.validation.k_min, 3);
  EXPECT_EQ(c.synth.rear_fov_deg, 120.0);
  EXPECT_EQ(c.synth.rear_fov_effective_deg, 100.0);
  EXPECT_EQ(c.grid.width, 512);
  EXPECT_EQ(c.grid.height, 512);
  EXPECT_EQ(c.grid.x_min, -50.0);
  EXPECT_EQ(c.grid.x_max, 50.0);
  EXPECT_EQ(c.grid.y_min, -50.0);
  EXPECT_EQ(c.grid.y_max, 50.0);
  EXPECT_NEAR(c.grid.resolution(), 0.195, 0.0005);
  EXPECT_EQ(c.tau_int, 60);
  EXPECT_EQ(c.eval.dist_thresholds, (std::vector<double>{0.5, 1, 2, 4}));
  EXPECT_EQ(c.eval.max_range, 50.0);
  EXPECT_EQ(c.eval.categories.size(), 7u);
}

TEST(Config, EveryKeyRoundTrips) {
  PipelineConfig c;
  for (const std::string& key : config_keys()) {
    PipelineConfig d;
    set_config_value(d, key, get_config_value(c, key));
    EXPECT_EQ(get_config_value(d, key), get_config_value(c, key)) << key;
  }
  PipelineConfig back;
  apply_config_text(back, config_to_text(c), "dump");
  EXPECT_EQ(config_to_text(back), config_to_text(c));
}

TEST(Config, LaterAssignmentsWin) {
  PipelineConfig c;
  apply_config_text(c, "validation.tau_d = 4\n# comment\nvalidation.tau_d = 6\n", "mem");
  EXPECT_EQ(c.validation.tau_d, 6.0);
  set_config_value(c, "validation.tau_d", "8");
  EXPECT_EQ(c.validation.tau_d, 8.0);
  set_config_value(c, "eval.ap_method", "interp101");
  EXPECT_EQ(c.eval.method, metrics::ApMethod::kInterp101);
  set_config_value(c, "enhancer.kind", "oracle");
  EXPECT_EQ(c.enhancer.kind, enhance::EnhancerKind::kOracle);
}

TEST(Config, ErrorsNameOriginAndLine) {
  PipelineConfig c;
  try {
    apply_config_text(c, "run.seed = 1\nvalidation.bogus = 3\n", "my.conf");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_NE(std::string(e.what()).find("my.conf:2"), std::string::npos) << e.what();
  }
  EXPECT_HD_ERROR(apply_config_text(c, "no equals sign\n", "m"), ErrorCode::kConfig);
  EXPECT_HD_ERROR(set_config_value(c, "validation.k_min", "three"), ErrorCode::kConfig);
  EXPECT_HD_ERROR(set_config_value(c, "validation.enabled", "maybe"), ErrorCode::kConfig);
  EXPECT_HD_ERROR(set_config_value(c, "ground.method", "magic"), ErrorCode::kConfig);
  EXPECT_HD_ERROR(set_config_value(c, "eval.categories", "car,bicycle"), ErrorCode::kConfig);
  EXPECT_HD_ERROR(load_config_file(c, "/nonexistent.conf"), ErrorCode::kConfig);
}

TEST(Config, CheckRejectsInconsistentValues) {
  auto bad = [](const char* key, const char* value) {
    PipelineConfig c;
    set_config_value(c, key, value);
    EXPECT_HD_ERROR(c.check(), ErrorCode::kConfig);
  };
  bad("thresholds.tau_int", "256");
  bad("synth.rear_fov_effective_deg", "130");
  bad("grid.height", "256");
  bad("validation.r", "0");
  bad("thresholds.fscore_tau", "0");
  bad("eval.dist_thresholds", "2,1");
  bad("enhancer.kind", "external");
  PipelineConfig{}.check();
}
