#include <gtest/gtest.h>

#include <cstring>
#include <limits>

#include "hyperdet/io.hpp"
#include "test_util.hpp"

using namespace hyperdet;
using hdtest::Rng;

TEST(Format, DoublesRoundTripExactly) {
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const double v = rng.uniform(-1e4, 1e4) * std::pow(10.0, rng.integer(-12, 6));
    const double back = parse_double(format_double(v));
    EXPECT_EQ(std::memcmp(&v, &back, sizeof v), 0) << format_double(v);
  }
  for (double v : {0.0, -0.0, 1.0 / 3.0, std::numeric_limits<double>::denorm_min(),
                   std::numeric_limits<double>::max()}) {
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
}

TEST(Format, HasAtLeastNineSignificantDigits) {
  const std::string s = format_double(0.1);
  std::size_t digits = 0;
  for (char c : s.substr(0, s.find('e'))) digits += std::isdigit(static_cast<unsigned char>(c)) ? 1 : 0;
  EXPECT_GE(digits, 9u);
}

TEST(Format, ParseRejectsGarbage) {
  EXPECT_HD_ERROR(parse_double("1.5x"), ErrorCode::kFormat);
  EXPECT_HD_ERROR(parse_double(""), ErrorCode::kFormat);
  EXPECT_HD_ERROR(parse_int("12.5"), ErrorCode::kFormat);
  EXPECT_EQ(parse_int(" -7 "), -7);
}

TEST(CloudCsv, RoundTripIsBitExact) {
  Rng rng(12);
  PointCloud c = rng.cloud(200, "sensor_3", 3);
  const auto dir = hdtest::scratch_dir("io_roundtrip");
  write_cloud_csv(c, dir / "c.csv");
  const PointCloud back = read_cloud_csv(dir / "c.csv");
  EXPECT_EQ(back, c);
  EXPECT_EQ(cloud_to_csv(back), cloud_to_csv(c));
}

TEST(CloudCsv, LayoutHasFrameCommentHeaderAndLf) {
  PointCloud c;
  c.frame_id = "reference";
  c.points.push_back({1, 2, 3, 4, 5, 6, 7});
  const std::string text = cloud_to_csv(c);
  EXPECT_EQ(text.rfind("# frame=reference\nx,y,z,rcs,doppler,sensor_id,t\n", 0), 0u);
  EXPECT_EQ(text.find('\r'), std::string::npos);
  EXPECT_EQ(text.back(), '\n');
}

TEST(CloudCsv, EmptyCloudRoundTrips) {
  PointCloud c;
  c.frame_id = "x";
  EXPECT_EQ(parse_cloud_csv(cloud_to_csv(c), "mem"), c);
}

TEST(CloudCsv, MalformedInputsAreRejected) {
  EXPECT_HD_ERROR(parse_cloud_csv("x,y,z\n1,2,3\n", "mem"), ErrorCode::kFormat);
  EXPECT_HD_ERROR(parse_cloud_csv("x,y,z,rcs,doppler,sensor_id,t\n1,2,3\n", "mem"), ErrorCode::kFormat);
  EXPECT_HD_ERROR(parse_cloud_csv("x,y,z,rcs,doppler,sensor_id,t\n1,2,3,4,5,a,7\n", "mem"), ErrorCode::kFormat);
  EXPECT_HD_ERROR(parse_cloud_csv("x,y,z,rcs,doppler,sensor_id,t\n1,2,nan,4,5,0,7\n", "mem"), ErrorCode::kFormat);
  EXPECT_HD_ERROR(parse_cloud_csv("", "mem"), ErrorCode::kFormat);
}

TEST(Files, MissingArtifactNamesFileAndStage) {
  try {
    require_artifact("/nonexistent/dir/f0000.csv", "fuse");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingArtifact);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("f0000.csv"), std::string::npos);
    EXPECT_NE(msg.find("fuse"), std::string::npos);
  }
  EXPECT_HD_ERROR(read_text_file("/nonexistent/file"), ErrorCode::kIo);
}

TEST(Files, WriteCreatesParentsAndLeavesNoTemporary) {
  const auto dir = hdtest::scratch_dir("io_write");
  write_text_file(dir / "a" / "b" / "c.txt", "hello");
  EXPECT_EQ(read_text_file(dir / "a" / "b" / "c.txt"), "hello");
  std::size_t n = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "a" / "b")) {
    (void)e;
    ++n;
  }
  EXPECT_EQ(n, 1u);
}
