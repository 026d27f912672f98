#include "hyperdet/enhance.hpp"

#include <sys/wait.h>

#include <array>
#include <cstdio>

#include "hyperdet/error.hpp"
#include "hyperdet/io.hpp"
#include "hyperdet/neighbor_index.hpp"

namespace hyperdet::enhance {

namespace {

constexpr std::size_t kMaxDiagnostics = 4096;

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

std::string replace_all(std::string s, std::string_view from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

struct CommandResult {
  int status = -1;
  std::string output;
};

CommandResult run_command(const std::string& cmd) {
  CommandResult res;
  FILE* pipe = ::popen((cmd + " 2>&1").c_str(), "r");
  if (pipe == nullptr) {
    res.output = "popen failed";
    return res;
  }
  std::array<char, 512> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    if (res.output.size() < kMaxDiagnostics) res.output.append(buf.data(), n);
  }
  const int raw = ::pclose(pipe);
  res.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return res;
}

bev::BEVGrid run_external(const bev::BEVGrid& condition, const EnhancerSpec& spec) {
  namespace fs = std::filesystem;
  const fs::path dir = spec.work_dir.empty() ? fs::temp_directory_path() : spec.work_dir;
  fs::create_directories(dir);
  const fs::path in = dir / "condition.pgm";
  const fs::path out = dir / "enhanced.pgm";
  fs::remove(out);
  bev::write_pgm(condition, in);

  std::string cmd = spec.external_cmd;
  if (cmd.find("{in}") != std::string::npos || cmd.find("{out}") != std::string::npos) {
    cmd = replace_all(cmd, "{in}", shell_quote(in.string()));
    cmd = replace_all(cmd, "{out}", shell_quote(out.string()));
  } else {
    cmd += " " + shell_quote(in.string()) + " " + shell_quote(out.string());
  }
  const CommandResult res = run_command(cmd);
  if (res.status != 0) {
    fail(ErrorCode::kExternalEnhancer, "external enhancer exited with status " +
                                           std::to_string(res.status) + ": " + res.output);
  }
  if (!fs::exists(out)) {
    fail(ErrorCode::kExternalEnhancer, "external enhancer wrote no output at " + out.string() +
                                           (res.output.empty() ? "" : ": " + res.output));
  }
  try {
    return bev::read_pgm(out, condition.spec);
  } catch (const Error& e) {
    fail(ErrorCode::kExternalEnhancer, std::string("external enhancer output rejected: ") + e.what());
  }
}

}  // namespace

std::string_view enhancer_name(EnhancerKind k) {
  switch (k) {
    case EnhancerKind::kPassthrough: return "passthrough";
    case EnhancerKind::kOracle: return "oracle";
    case EnhancerKind::kExternal: return "external";
  }
  return "unknown";
}

EnhancerKind parse_enhancer(std::string_view s) {
  s = trim(s);
  if (s == "passthrough") return EnhancerKind::kPassthrough;
  if (s == "oracle") return EnhancerKind::kOracle;
  if (s == "external") return EnhancerKind::kExternal;
  fail(ErrorCode::kConfig, "unknown enhancer '" + std::string(s) + "'");
}

void EnhancerSpec::check() const {
  if (kind == EnhancerKind::kExternal && trim(external_cmd).empty()) {
    fail(ErrorCode::kConfig, "external enhancer needs a non-empty command");
  }
}

bev::BEVGrid enhance(const bev::BEVGrid& condition, const EnhancerSpec& spec,
                     const bev::BEVGrid* oracle_target) {
  spec.check();
  switch (spec.kind) {
    case EnhancerKind::kPassthrough:
      return condition;
    case EnhancerKind::kOracle:
      if (oracle_target == nullptr) {
        fail(ErrorCode::kInvalidArgument, "oracle enhancer needs the supervision target grid");
      }
      if (!(oracle_target->spec == condition.spec)) {
        fail(ErrorCode::kInvalidArgument, "oracle target grid geometry differs from condition");
      }
      return *oracle_target;
    case EnhancerKind::kExternal:
      return run_external(condition, spec);
  }
  fail(ErrorCode::kInternal, "unhandled enhancer kind");
}

PointCloud HyperCloud::to_point_cloud() const {
  PointCloud c;
  c.frame_id = frame_id;
  c.points.reserve(points.size());
  for (const HyperPoint& h : points) c.points.push_back(h.point);
  return c;
}

HyperCloud lift_attributes(std::span<const bev::ForegroundPixel> fg, const PointCloud& validated) {
  if (validated.empty()) {
    fail(ErrorCode::kInvalidArgument, "attribute lifting needs a non-empty validated cloud");
  }
  std::vector<Vec2> xy;
  xy.reserve(validated.size());
  for (const RadarPoint& p : validated.points) xy.emplace_back(p.x, p.y);
  const NeighborIndex index = NeighborIndex::build_planar(xy, 2.0);

  HyperCloud out;
  out.frame_id = validated.frame_id;
  out.points.reserve(fg.size());
  for (const bev::ForegroundPixel& f : fg) {
    const std::size_t src = *index.nearest(Vec3(f.x, f.y, 0.0));
    const RadarPoint& s = validated.points[src];
    HyperPoint h;
    h.point = s;
    h.point.x = f.x;
    h.point.y = f.y;
    h.point.sensor_id = kLiftedSensor;
    h.confidence = f.confidence;
    h.source_index = src;
    out.points.push_back(h);
  }
  return out;
}

HyperCloud assemble_hyper_cloud(const bev::BEVGrid& enhanced, const PointCloud& validated,
                                std::uint8_t tau_int, bool union_raw) {
  const auto fg = bev::derasterize(enhanced, tau_int);
  HyperCloud lifted;
  lifted.frame_id = validated.frame_id;
  if (!fg.empty()) lifted = lift_attributes(fg, validated);
  if (!union_raw) return lifted;
  HyperCloud out;
  out.frame_id = validated.frame_id;
  for (std::size_t i = 0; i < validated.size(); ++i) {
    out.points.push_back({validated.points[i], 1.0, i});
  }
  out.points.insert(out.points.end(), lifted.points.begin(), lifted.points.end());
  return out;
}

std::string hyper_to_csv(const HyperCloud& cloud) {
  std::string out = "# frame=" + cloud.frame_id + "\n";
  out += kHyperHeader;
  out += '\n';
  for (const HyperPoint& h : cloud.points) {
    const RadarPoint& p = h.point;
    out += format_double(p.x) + ',' + format_double(p.y) + ',' + format_double(p.z) + ',' +
           format_double(p.rcs) + ',' + format_double(p.doppler) + ',' +
           std::to_string(p.sensor_id) + ',' + format_double(p.t) + ',' +
           format_double(h.confidence) + ',' + std::to_string(h.source_index) + '\n';
  }
  return out;
}

void write_hyper_csv(const HyperCloud& cloud, const std::filesystem::path& path) {
  write_text_file(path, hyper_to_csv(cloud));
}

HyperCloud read_hyper_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  HyperCloud out;
  bool header = false;
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (!header && line.starts_with("# frame=")) out.frame_id = std::string(line.substr(8));
      continue;
    }
    if (!header) {
      if (line != kHyperHeader) fail(ErrorCode::kFormat, path.string() + ": bad hyper-cloud header");
      header = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 9) {
      fail(ErrorCode::kFormat, path.string() + ":" + std::to_string(line_no) + ": expected 9 fields");
    }
    HyperPoint h;
    h.point.x = parse_double(f[0]);
    h.point.y = parse_double(f[1]);
    h.point.z = parse_double(f[2]);
    h.point.rcs = parse_double(f[3]);
    h.point.doppler = parse_double(f[4]);
    h.point.sensor_id = static_cast<int>(parse_int(f[5]));
    h.point.t = parse_double(f[6]);
    h.confidence = parse_double(f[7]);
    h.source_index = static_cast<std::size_t>(parse_int(f[8]));
    out.points.push_back(h);
  }
  if (!header) fail(ErrorCode::kFormat, path.string() + ": missing hyper-cloud header");
  return out;
}

}  // namespace hyperdet::enhance
