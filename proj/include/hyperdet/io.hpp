#pragma once

// Text formats: point-cloud CSV, label CSV and small file helpers.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hyperdet/core.hpp"

namespace hyperdet {

namespace fs = std::filesystem;

inline constexpr std::string_view kCloudHeader = "x,y,z,rcs,doppler,sensor_id,t";

/// Exact decimal representation with 17 significant digits.
std::string format_double(double v);
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

void write_cloud_csv(const PointCloud& cloud, const fs::path& path);
std::string cloud_to_csv(const PointCloud& cloud);
PointCloud read_cloud_csv(const fs::path& path);
PointCloud parse_cloud_csv(std::string_view text, std::string_view origin);

std::string read_text_file(const fs::path& path);
/// Writes through a temporary sibling and renames, creating parent dirs.
void write_text_file(const fs::path& path, std::string_view content);

/// Throws kMissingArtifact naming the stage that produces the file.
void require_artifact(const fs::path& path, std::string_view producing_stage);

}  // namespace hyperdet
