#include "hyperdet/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "hyperdet/error.hpp"

namespace hyperdet {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v,
                           std::chars_format::scientific, 16);
  return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    // from_chars does not accept "inf"/"nan" spellings with signs on all
    // libraries; fall back to strtod for those.
    std::string tmp(s);
    char* end = nullptr;
    v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size()) {
      fail(ErrorCode::kFormat, "not a number: '" + std::string(s) + "'");
    }
  }
  return v;
}

long long parse_int(std::string_view s) {
  s = trim(s);
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    fail(ErrorCode::kFormat, "not an integer: '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string cloud_to_csv(const PointCloud& cloud) {
  std::string out;
  out.reserve(64 + cloud.size() * 160);
  out += "# frame=" + cloud.frame_id + "\n";
  out += kCloudHeader;
  out += '\n';
  for (const RadarPoint& p : cloud.points) {
    out += format_double(p.x);
    out += ',';
    out += format_double(p.y);
    out += ',';
    out += format_double(p.z);
    out += ',';
    out += format_double(p.rcs);
    out += ',';
    out += format_double(p.doppler);
    out += ',';
    out += std::to_string(p.sensor_id);
    out += ',';
    out += format_double(p.t);
    out += '\n';
  }
  return out;
}

void write_cloud_csv(const PointCloud& cloud, const fs::path& path) {
  write_text_file(path, cloud_to_csv(cloud));
}

PointCloud parse_cloud_csv(std::string_view text, std::string_view origin) {
  PointCloud cloud;
  bool header_seen = false;
  std::size_t line_no = 0;
  const std::string where(origin);
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      constexpr std::string_view kFrame = "# frame=";
      if (!header_seen && line.starts_with(kFrame)) {
        cloud.frame_id = std::string(line.substr(kFrame.size()));
      }
      continue;
    }
    if (!header_seen) {
      if (line != kCloudHeader) {
        fail(ErrorCode::kFormat, where + ":" + std::to_string(line_no) +
                                     ": expected header '" +
                                     std::string(kCloudHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 7) {
      fail(ErrorCode::kFormat, where + ":" + std::to_string(line_no) +
                                   ": expected 7 fields, got " +
                                   std::to_string(f.size()));
    }
    try {
      RadarPoint p;
      p.x = parse_double(f[0]);
      p.y = parse_double(f[1]);
      p.z = parse_double(f[2]);
      p.rcs = parse_double(f[3]);
      p.doppler = parse_double(f[4]);
      p.sensor_id = static_cast<int>(parse_int(f[5]));
      p.t = parse_double(f[6]);
      if (!p.position().allFinite()) fail(ErrorCode::kFormat, "non-finite coordinate");
      cloud.points.push_back(p);
    } catch (const Error& e) {
      fail(ErrorCode::kFormat,
           where + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header_seen) {
    fail(ErrorCode::kFormat, where + ": missing CSV header");
  }
  return cloud;
}

PointCloud read_cloud_csv(const fs::path& path) {
  return parse_cloud_csv(read_text_file(path), path.string());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) fail(ErrorCode::kIo, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void require_artifact(const fs::path& path, std::string_view producing_stage) {
  if (!fs::exists(path)) {
    fail(ErrorCode::kMissingArtifact,
         "missing artifact " + path.string() + " (produced by stage '" +
             std::string(producing_stage) + "')");
  }
}

}  // namespace hyperdet
