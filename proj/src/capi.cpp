#include "hyperdet/hyperdet.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <memory>
#include <mutex>
#include <new>
#include <string>

#include "hyperdet/bev.hpp"
#include "hyperdet/config.hpp"
#include "hyperdet/enhance.hpp"
#include "hyperdet/error.hpp"
#include "hyperdet/io.hpp"
#include "hyperdet/metrics.hpp"
#include "hyperdet/pipeline.hpp"
#include "hyperdet/validation.hpp"

struct hd_config {
  hyperdet::PipelineConfig cfg;
};
struct hd_cloud {
  hyperdet::PointCloud cloud;
};
struct hd_grid {
  hyperdet::bev::BEVGrid grid;
};

namespace {

using namespace hyperdet;

thread_local std::string g_last_error;

std::mutex g_log_mu;
hd_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

void log_line(std::string_view msg) {
  std::lock_guard<std::mutex> lock(g_log_mu);
  if (g_log_fn == nullptr) return;
  const std::string s(msg);
  g_log_fn(s.c_str(), g_log_user);
}

hd_status to_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::kInvalidArgument: return HD_ERR_INVALID_ARGUMENT;
    case ErrorCode::kConfig: return HD_ERR_CONFIG;
    case ErrorCode::kMissingArtifact: return HD_ERR_MISSING_ARTIFACT;
    case ErrorCode::kExternalEnhancer: return HD_ERR_EXTERNAL_ENHANCER;
    case ErrorCode::kIo: return HD_ERR_IO;
    case ErrorCode::kFormat: return HD_ERR_FORMAT;
    case ErrorCode::kInfeasible: return HD_ERR_INFEASIBLE;
    case ErrorCode::kInternal: return HD_ERR_INTERNAL;
  }
  return HD_ERR_INTERNAL;
}

template <typename Fn>
hd_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return HD_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return HD_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HD_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return HD_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) fail(ErrorCode::kInvalidArgument, std::string(what) + " must not be NULL");
}

void copy_out(const std::string& s, char* buf, size_t buf_size, size_t* needed) {
  if (needed != nullptr) *needed = s.size() + 1;
  if (buf != nullptr && buf_size > 0) {
    const size_t n = std::min(buf_size - 1, s.size());
    std::memcpy(buf, s.data(), n);
    buf[n] = '\0';
  }
}

pipeline::StageOptions options(const char* frames) {
  pipeline::StageOptions opt;
  opt.log = log_line;
  if (frames != nullptr) {
    for (std::string_view f : split(frames, ',')) {
      f = trim(f);
      if (f.empty()) continue;
      const long long j = parse_int(f);
      if (j < 0) fail(ErrorCode::kInvalidArgument, "frame index must be >= 0");
      opt.frames.push_back(static_cast<std::size_t>(j));
    }
  }
  return opt;
}

RadarPoint from_c(const hd_point& p) { return {p.x, p.y, p.z, p.rcs, p.doppler, p.sensor_id, p.t}; }
hd_point to_c(const RadarPoint& p) { return {p.x, p.y, p.z, p.rcs, p.doppler, p.sensor_id, p.t}; }

bev::GridSpec spec_from_c(const hd_grid_spec& s) {
  bev::GridSpec g;
  g.x_min = s.x_min;
  g.x_max = s.x_max;
  g.y_min = s.y_min;
  g.y_max = s.y_max;
  g.width = s.width;
  g.height = s.height;
  return g;
}

std::vector<Vec2> xy_array(const double* xy, size_t n, const char* what) {
  if (n > 0) need(xy, what);
  std::vector<Vec2> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) out.emplace_back(xy[2 * i], xy[2 * i + 1]);
  return out;
}

}  // namespace

extern "C" {

const char* hd_version(void) { return "0.1.0"; }

const char* hd_last_error(void) { return g_last_error.c_str(); }

const char* hd_status_name(hd_status s) {
  switch (s) {
    case HD_OK: return "ok";
    case HD_ERR_INVALID_ARGUMENT: return "invalid argument";
    case HD_ERR_CONFIG: return "config error";
    case HD_ERR_MISSING_ARTIFACT: return "missing artifact";
    case HD_ERR_EXTERNAL_ENHANCER: return "external enhancer failure";
    case HD_ERR_IO: return "i/o error";
    case HD_ERR_FORMAT: return "format error";
    case HD_ERR_INFEASIBLE: return "infeasible";
    case HD_ERR_INTERNAL: return "internal error";
  }
  return "unknown";
}

void hd_set_log_callback(hd_log_fn fn, void* user) {
  std::lock_guard<std::mutex> lock(g_log_mu);
  g_log_fn = fn;
  g_log_user = user;
}

hd_status hd_config_create(hd_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new hd_config();
  });
}

void hd_config_destroy(hd_config* cfg) { delete cfg; }

hd_status hd_config_load(hd_config* cfg, const char* path) {
  return guarded([&] {
    need(cfg, "cfg");
    need(path, "path");
    load_config_file(cfg->cfg, path);
  });
}

hd_status hd_config_set(hd_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(value, "value");
    set_config_value(cfg->cfg, key, value);
  });
}

hd_status hd_config_get(const hd_config* cfg, const char* key, char* buf, size_t buf_size, size_t* needed) {
  return guarded([&] {
    need(cfg, "cfg");
    need(key, "key");
    copy_out(get_config_value(cfg->cfg, key), buf, buf_size, needed);
  });
}

hd_status hd_config_dump(const hd_config* cfg, char* buf, size_t buf_size, size_t* needed) {
  return guarded([&] {
    need(cfg, "cfg");
    copy_out(config_to_text(cfg->cfg), buf, buf_size, needed);
  });
}

hd_status hd_config_check(const hd_config* cfg) {
  return guarded([&] {
    need(cfg, "cfg");
    cfg->cfg.check();
  });
}

hd_status hd_run_stage(const hd_config* cfg, const char* stage, const char* frames) {
  return guarded([&] {
    need(cfg, "cfg");
    need(stage, "stage");
    pipeline::run_stage(stage, cfg->cfg, options(frames));
  });
}

hd_status hd_run_all(const hd_config* cfg, const char* frames) {
  return guarded([&] {
    need(cfg, "cfg");
    pipeline::run_all(cfg->cfg, options(frames));
  });
}

hd_status hd_run_ablation(const hd_config* cfg, const char* axes) {
  return guarded([&] {
    need(cfg, "cfg");
    const auto rows = pipeline::run_ablation(cfg->cfg, pipeline::parse_axes(axes ? axes : ""), options(nullptr));
    log_line(pipeline::ablation_csv(rows));
  });
}

hd_status hd_manifest(const char* out_dir, char* buf, size_t buf_size, size_t* needed) {
  return guarded([&] {
    need(out_dir, "out_dir");
    copy_out(pipeline::build_manifest(out_dir), buf, buf_size, needed);
  });
}

hd_status hd_cloud_create(const char* frame_id, hd_cloud** out) {
  return guarded([&] {
    need(out, "out");
    *out = new hd_cloud();
    if (frame_id != nullptr) (*out)->cloud.frame_id = frame_id;
  });
}

void hd_cloud_destroy(hd_cloud* cloud) { delete cloud; }

hd_status hd_cloud_read(const char* path, hd_cloud** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto c = std::make_unique<hd_cloud>();
    c->cloud = read_cloud_csv(path);
    *out = c.release();
  });
}

hd_status hd_cloud_write(const hd_cloud* cloud, const char* path) {
  return guarded([&] {
    need(cloud, "cloud");
    need(path, "path");
    write_cloud_csv(cloud->cloud, path);
  });
}

size_t hd_cloud_size(const hd_cloud* cloud) { return cloud == nullptr ? 0 : cloud->cloud.size(); }

const char* hd_cloud_frame(const hd_cloud* cloud) { return cloud == nullptr ? "" : cloud->cloud.frame_id.c_str(); }

hd_status hd_cloud_get(const hd_cloud* cloud, size_t index, hd_point* out) {
  return guarded([&] {
    need(cloud, "cloud");
    need(out, "out");
    if (index >= cloud->cloud.size()) fail(ErrorCode::kInvalidArgument, "point index out of range");
    *out = to_c(cloud->cloud.points[index]);
  });
}

hd_status hd_cloud_push(hd_cloud* cloud, const hd_point* p) {
  return guarded([&] {
    need(cloud, "cloud");
    need(p, "point");
    cloud->cloud.points.push_back(from_c(*p));
  });
}

hd_status hd_validate(const hd_cloud* merged, double tau_d, double r, int k_min, hd_cloud** kept,
                      unsigned char* keep_flags) {
  return guarded([&] {
    need(merged, "merged");
    need(kept, "kept");
    validation::ValidationParams params;
    params.tau_d = tau_d;
    params.r = r;
    params.k_min = k_min;
    const auto res = validation::validate(validation::split_by_sensor(merged->cloud), params);
    auto c = std::make_unique<hd_cloud>();
    c->cloud = res.cloud;
    c->cloud.frame_id = merged->cloud.frame_id;
    if (keep_flags != nullptr) std::copy(res.keep.begin(), res.keep.end(), keep_flags);
    *kept = c.release();
  });
}

void hd_grid_default_spec(hd_grid_spec* spec) {
  if (spec == nullptr) return;
  const bev::GridSpec g;
  *spec = {g.x_min, g.x_max, g.y_min, g.y_max, g.width, g.height};
}

hd_status hd_grid_rasterize(const hd_cloud* cloud, const hd_grid_spec* spec, hd_grid** out, size_t* skipped) {
  return guarded([&] {
    need(cloud, "cloud");
    need(out, "out");
    const bev::GridSpec g = spec == nullptr ? bev::GridSpec{} : spec_from_c(*spec);
    g.check();
    auto r = bev::rasterize(cloud->cloud, g);
    if (skipped != nullptr) *skipped = r.skipped;
    *out = new hd_grid{std::move(r.grid)};
  });
}

void hd_grid_destroy(hd_grid* grid) { delete grid; }

hd_status hd_grid_read(const char* path, hd_grid** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new hd_grid{bev::read_pgm(path)};
  });
}

hd_status hd_grid_write(const hd_grid* grid, const char* path) {
  return guarded([&] {
    need(grid, "grid");
    need(path, "path");
    bev::write_pgm(grid->grid, path);
  });
}

hd_status hd_grid_spec_of(const hd_grid* grid, hd_grid_spec* spec) {
  return guarded([&] {
    need(grid, "grid");
    need(spec, "spec");
    const bev::GridSpec& g = grid->grid.spec;
    *spec = {g.x_min, g.x_max, g.y_min, g.y_max, g.width, g.height};
  });
}

const unsigned char* hd_grid_data(const hd_grid* grid) {
  return grid == nullptr ? nullptr : grid->grid.intensity.data();
}

hd_status hd_enhance_external(const hd_grid* condition, const char* cmd, const char* work_dir, hd_grid** out) {
  return guarded([&] {
    need(condition, "condition");
    need(cmd, "cmd");
    need(out, "out");
    enhance::EnhancerSpec spec;
    spec.kind = enhance::EnhancerKind::kExternal;
    spec.external_cmd = cmd;
    if (work_dir != nullptr) spec.work_dir = work_dir;
    *out = new hd_grid{enhance::enhance(condition->grid, spec)};
  });
}

hd_status hd_chamfer(const double* a_xy, size_t na, const double* b_xy, size_t nb, int root, double* out) {
  return guarded([&] {
    need(out, "out");
    const auto a = xy_array(a_xy, na, "a_xy");
    const auto b = xy_array(b_xy, nb, "b_xy");
    *out = metrics::chamfer(a, b, root != 0);
  });
}

hd_status hd_hausdorff(const double* a_xy, size_t na, const double* b_xy, size_t nb, double* out) {
  return guarded([&] {
    need(out, "out");
    const auto a = xy_array(a_xy, na, "a_xy");
    const auto b = xy_array(b_xy, nb, "b_xy");
    *out = metrics::hausdorff(a, b);
  });
}

hd_status hd_fscore(const double* a_xy, size_t na, const double* b_xy, size_t nb, double tau, double* out) {
  return guarded([&] {
    need(out, "out");
    const auto a = xy_array(a_xy, na, "a_xy");
    const auto b = xy_array(b_xy, nb, "b_xy");
    *out = metrics::fscore(a, b, tau);
  });
}

}  // extern "C"
