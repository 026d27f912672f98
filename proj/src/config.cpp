#include "hyperdet/config.hpp"

#include <charconv>
#include <functional>

#include "hyperdet/error.hpp"
#include "hyperdet/io.hpp"

namespace hyperdet {

namespace {

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double as_double(std::string_view key, std::string_view v) {
  try {
    return parse_double(v);
  } catch (const Error&) {
    fail(ErrorCode::kConfig, std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  }
}

long long as_int(std::string_view key, std::string_view v) {
  try {
    return parse_int(v);
  } catch (const Error&) {
    fail(ErrorCode::kConfig, std::string(key) + ": expected an integer, got '" + std::string(v) + "'");
  }
}

std::size_t as_count(std::string_view key, std::string_view v) {
  const long long n = as_int(key, v);
  if (n < 0) fail(ErrorCode::kConfig, std::string(key) + ": must be >= 0");
  return static_cast<std::size_t>(n);
}

bool as_bool(std::string_view key, std::string_view v) {
  v = trim(v);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(ErrorCode::kConfig, std::string(key) + ": expected true/false, got '" + std::string(v) + "'");
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

struct Entry {
  const char* key;
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

#define HD_DOUBLE(KEY, FIELD)                                                                    \
  Entry {                                                                                        \
    KEY, [](PipelineConfig& c, std::string_view v) { c.FIELD = as_double(KEY, v); },             \
        [](const PipelineConfig& c) { return num(c.FIELD); }                                     \
  }
#define HD_COUNT(KEY, FIELD)                                                                     \
  Entry {                                                                                        \
    KEY, [](PipelineConfig& c, std::string_view v) { c.FIELD = as_count(KEY, v); },              \
        [](const PipelineConfig& c) { return std::to_string(c.FIELD); }                          \
  }
#define HD_INT(KEY, FIELD)                                                                       \
  Entry {                                                                                        \
    KEY, [](PipelineConfig& c, std::string_view v) { c.FIELD = static_cast<int>(as_int(KEY, v)); }, \
        [](const PipelineConfig& c) { return std::to_string(c.FIELD); }                          \
  }
#define HD_BOOL(KEY, FIELD)                                                                      \
  Entry {                                                                                        \
    KEY, [](PipelineConfig& c, std::string_view v) { c.FIELD = as_bool(KEY, v); },               \
        [](const PipelineConfig& c) { return bool_str(c.FIELD); }                                \
  }
#define HD_PATH(KEY, FIELD)                                                                      \
  Entry {                                                                                        \
    KEY, [](PipelineConfig& c, std::string_view v) { c.FIELD = std::string(trim(v)); },          \
        [](const PipelineConfig& c) { return c.FIELD.string(); }                                 \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      HD_PATH("run.out", out_dir),
      Entry{"run.seed",
            [](PipelineConfig& c, std::string_view v) {
              const std::string s(trim(v));
              std::uint64_t seed = 0;
              auto res = std::from_chars(s.data(), s.data() + s.size(), seed);
              if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
                fail(ErrorCode::kConfig, "run.seed: expected an unsigned integer, got '" + s + "'");
              }
              c.seed = seed;
            },
            [](const PipelineConfig& c) { return std::to_string(c.seed); }},
      HD_INT("run.jobs", jobs),
      HD_PATH("scene.path", scene_path),

      HD_COUNT("synth.num_keyframes", synth.num_keyframes),
      HD_COUNT("synth.num_objects", synth.num_objects),
      HD_DOUBLE("synth.rear_fov_deg", synth.rear_fov_deg),
      HD_DOUBLE("synth.rear_fov_effective_deg", synth.rear_fov_effective_deg),
      HD_DOUBLE("synth.radar_noise", synth.radar_noise),
      HD_DOUBLE("synth.lidar_noise", synth.lidar_noise),
      HD_DOUBLE("synth.radar_density", synth.radar_density),
      HD_DOUBLE("synth.lidar_density_multiplier", synth.lidar_density_multiplier),
      HD_COUNT("synth.ghosts_per_sweep", synth.ghosts_per_sweep),
      HD_COUNT("synth.clutter_per_sweep", synth.clutter_per_sweep),
      HD_DOUBLE("synth.ego_speed", synth.ego_speed),
      HD_DOUBLE("synth.ego_yaw_rate", synth.ego_yaw_rate),

      HD_DOUBLE("window.seconds", window.window_seconds),
      HD_DOUBLE("window.frame_rate", window.frame_rate),

      HD_BOOL("validation.enabled", validation_enabled),
      HD_DOUBLE("validation.tau_d", validation.tau_d),
      HD_DOUBLE("validation.r", validation.r),
      HD_INT("validation.k_min", validation.k_min),
      HD_BOOL("validation.include_self", validation.include_self),

      HD_DOUBLE("grid.x_min", grid.x_min),
      HD_DOUBLE("grid.x_max", grid.x_max),
      HD_DOUBLE("grid.y_min", grid.y_min),
      HD_DOUBLE("grid.y_max", grid.y_max),
      HD_INT("grid.width", grid.width),
      HD_INT("grid.height", grid.height),

      Entry{"ground.method",
            [](PipelineConfig& c, std::string_view v) {
              v = trim(v);
              if (v == "plane_ransac") {
                c.ground.method = supervision::GroundMethod::kPlaneRansac;
              } else if (v == "z_threshold") {
                c.ground.method = supervision::GroundMethod::kZThreshold;
              } else {
                fail(ErrorCode::kConfig, "ground.method: expected plane_ransac or z_threshold");
              }
            },
            [](const PipelineConfig& c) {
              return std::string(c.ground.method == supervision::GroundMethod::kPlaneRansac ? "plane_ransac"
                                                                                           : "z_threshold");
            }},
      HD_DOUBLE("ground.z_cut", ground.z_cut),
      HD_INT("ground.ransac_iters", ground.ransac_iters),
      HD_DOUBLE("ground.inlier_tol", ground.inlier_tol),

      Entry{"enhancer.kind",
            [](PipelineConfig& c, std::string_view v) { c.enhancer.kind = enhance::parse_enhancer(v); },
            [](const PipelineConfig& c) { return std::string(enhance::enhancer_name(c.enhancer.kind)); }},
      Entry{"enhancer.external_cmd",
            [](PipelineConfig& c, std::string_view v) { c.enhancer.external_cmd = std::string(trim(v)); },
            [](const PipelineConfig& c) { return c.enhancer.external_cmd; }},
      HD_BOOL("enhance.union_raw", union_raw),

      HD_INT("thresholds.tau_int", tau_int),
      HD_DOUBLE("thresholds.fscore_tau", fscore_tau),

      Entry{"eval.dist_thresholds",
            [](PipelineConfig& c, std::string_view v) {
              c.eval.dist_thresholds.clear();
              for (auto part : split(v, ',')) {
                if (!trim(part).empty()) c.eval.dist_thresholds.push_back(as_double("eval.dist_thresholds", part));
              }
            },
            [](const PipelineConfig& c) {
              std::string s;
              for (double d : c.eval.dist_thresholds) s += (s.empty() ? "" : ",") + num(d);
              return s;
            }},
      HD_DOUBLE("eval.max_range", eval.max_range),
      Entry{"eval.categories",
            [](PipelineConfig& c, std::string_view v) {
              c.eval.categories.clear();
              for (auto part : split(v, ',')) {
                part = trim(part);
                if (part.empty()) continue;
                const auto cat = parse_category(part);
                if (!cat) fail(ErrorCode::kConfig, "eval.categories: unknown category '" + std::string(part) + "'");
                c.eval.categories.push_back(*cat);
              }
            },
            [](const PipelineConfig& c) {
              std::string s;
              for (Category cat : c.eval.categories) s += (s.empty() ? "" : ",") + std::string(category_name(cat));
              return s;
            }},
      Entry{"eval.ap_method",
            [](PipelineConfig& c, std::string_view v) {
              v = trim(v);
              if (v == "nuscenes") {
                c.eval.method = metrics::ApMethod::kNuScenes;
              } else if (v == "interp101") {
                c.eval.method = metrics::ApMethod::kInterp101;
              } else {
                fail(ErrorCode::kConfig, "eval.ap_method: expected nuscenes or interp101");
              }
            },
            [](const PipelineConfig& c) {
              return std::string(c.eval.method == metrics::ApMethod::kNuScenes ? "nuscenes" : "interp101");
            }},
      HD_BOOL("eval.cd_root", cd_root),
      HD_PATH("eval.pred", pred_path),
      HD_PATH("eval.gt", gt_path),
  };
  return table;
}

#undef HD_DOUBLE
#undef HD_COUNT
#undef HD_INT
#undef HD_BOOL
#undef HD_PATH

const Entry& find_entry(std::string_view key) {
  for (const Entry& e : entries()) {
    if (key == e.key) return e;
  }
  fail(ErrorCode::kConfig, "unknown config key '" + std::string(key) + "'");
}

}  // namespace

void PipelineConfig::check() const {
  if (jobs < 1) fail(ErrorCode::kConfig, "run.jobs must be >= 1");
  if (synth.num_keyframes < 1) fail(ErrorCode::kConfig, "synth.num_keyframes must be >= 1");
  if (!(synth.rear_fov_effective_deg > 0.0 && synth.rear_fov_effective_deg <= synth.rear_fov_deg &&
        synth.rear_fov_deg <= 360.0)) {
    fail(ErrorCode::kConfig, "synth.rear_fov_effective_deg must be in (0, synth.rear_fov_deg]");
  }
  window.check();
  validation.check();
  grid.check();
  ground.check();
  enhancer.check();
  if (tau_int < 0 || tau_int > 255) fail(ErrorCode::kConfig, "thresholds.tau_int must be in [0, 255]");
  if (!(fscore_tau > 0.0)) fail(ErrorCode::kConfig, "thresholds.fscore_tau must be > 0");
  eval.check();
}

void set_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  try {
    find_entry(trim(key)).set(cfg, value);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    fail(ErrorCode::kConfig, std::string(trim(key)) + ": " + e.what());
  }
}

std::string get_config_value(const PipelineConfig& cfg, std::string_view key) {
  return find_entry(trim(key)).get(cfg);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const Entry& e : entries()) out.emplace_back(e.key);
  return out;
}

void apply_config_text(PipelineConfig& cfg, std::string_view text, std::string_view origin) {
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::kConfig, std::string(origin) + ":" + std::to_string(line_no) + ": expected key = value");
    }
    try {
      set_config_value(cfg, line.substr(0, eq), line.substr(eq + 1));
    } catch (const Error& e) {
      fail(ErrorCode::kConfig, std::string(origin) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void load_config_file(PipelineConfig& cfg, const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    fail(ErrorCode::kConfig, e.what());
  }
  apply_config_text(cfg, text, path.string());
}

std::string config_to_text(const PipelineConfig& cfg) {
  std::string out;
  for (const Entry& e : entries()) {
    out += e.key;
    out += " = ";
    out += e.get(cfg);
    out += '\n';
  }
  return out;
}

}  // namespace hyperdet
