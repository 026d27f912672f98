#include "hyperdet/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "hyperdet/error.hpp"
#include "hyperdet/io.hpp"
#include "hyperdet/synth.hpp"

namespace hyperdet::pipeline {

namespace {

using synth::LabeledSweep;
using synth::PointLabel;

std::string idx4(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04zu", i);
  return buf;
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string opt_fixed(const std::optional<double>& v) { return v ? fixed(*v) : std::string("n/a"); }

void say(const StageOptions& opt, const std::string& msg) {
  if (opt.log) opt.log(msg);
}

struct Ctx {
  const PipelineConfig& cfg;
  const StageOptions& opt;
  Layout lay;
  synth::Scene scene;
  std::vector<std::size_t> frames;

  Ctx(const PipelineConfig& c, const StageOptions& o) : cfg(c), opt(o), lay(c, o) {}

  void load_scene() {
    require_artifact(lay.scene(), "synth");
    scene = synth::read_scene(lay.scene());
    select_frames();
  }

  void select_frames() {
    frames.clear();
    const std::size_t n = scene.keyframes.size();
    if (opt.frames.empty()) {
      for (std::size_t j = 0; j < n; ++j) frames.push_back(j);
      return;
    }
    for (std::size_t j : opt.frames) {
      if (j >= n) {
        fail(ErrorCode::kInvalidArgument,
             "frame " + std::to_string(j) + " out of range (scene has " + std::to_string(n) + " keyframes)");
      }
      frames.push_back(j);
    }
    std::sort(frames.begin(), frames.end());
    frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
  }

  double keyframe_t(std::size_t j) const { return scene.timestamps[scene.keyframes[j]]; }

  template <typename Fn>
  void each_frame(Fn&& fn) const {
    parallel_for(frames.size(), cfg.jobs, [&](std::size_t i) { fn(frames[i]); });
  }
};

PointCloud read_input(const fs::path& p, std::string_view stage) {
  require_artifact(p, stage);
  return read_cloud_csv(p);
}

LabeledSweep read_labeled(const fs::path& cloud, const fs::path& labels, std::string_view stage) {
  LabeledSweep s;
  s.points = read_input(cloud, stage);
  require_artifact(labels, stage);
  synth::read_labels_csv(labels, s);
  return s;
}

std::vector<Box3D> read_boxes(const fs::path& p) {
  require_artifact(p, "synth");
  return metrics::boxes_from_jsonl(read_text_file(p), p.string());
}

std::vector<Vec2> xy_of(const PointCloud& c) {
  std::vector<Vec2> out;
  out.reserve(c.size());
  for (const RadarPoint& p : c.points) out.emplace_back(p.x, p.y);
  return out;
}

// --- synth -------------------------------------------------------------------

synth::SceneConfig scene_config(const PipelineConfig& cfg) {
  synth::SceneConfig sc;
  sc.sensors = synth::truck_layout(cfg.synth.rear_fov_effective_deg);
  for (SensorConfig& s : sc.sensors) {
    if (s.sensor_id >= 4) s.fov_deg = cfg.synth.rear_fov_deg;
  }
  sc.frame_rate = cfg.window.frame_rate;
  sc.num_keyframes = cfg.synth.num_keyframes;
  sc.history_sweeps = cfg.window.sweep_count() - 1;
  sc.ego_speed = cfg.synth.ego_speed;
  sc.ego_yaw_rate = cfg.synth.ego_yaw_rate;
  sc.num_objects = cfg.synth.num_objects;
  sc.radar_density = cfg.synth.radar_density;
  sc.lidar.density_multiplier = cfg.synth.lidar_density_multiplier;
  return sc;
}

const std::vector<synth::ReflectorPlane>& reflector_planes() {
  static const std::vector<synth::ReflectorPlane> planes = {
      {Vec3::UnitY(), 8.0}, {-Vec3::UnitY(), 8.0}, {Vec3::UnitX(), 30.0}, {Vec3::UnitX(), 60.0}};
  return planes;
}

std::string stage_synth(Ctx& c) {
  const PipelineConfig& cfg = c.cfg;
  if (!cfg.scene_path.empty()) {
    require_artifact(cfg.scene_path, "an external scene generator");
    c.scene = synth::read_scene(cfg.scene_path);
  } else {
    c.scene = synth::generate_scene(scene_config(cfg), synth::derive_seed(cfg.seed, 1));
  }
  synth::write_scene(c.scene, c.lay.scene());
  c.select_frames();
  const synth::Scene& scene = c.scene;

  const std::size_t n_t = scene.timestamps.size();
  const std::size_t n_s = scene.sensors.size();
  parallel_for(n_t * n_s, cfg.jobs, [&](std::size_t k) {
    const std::size_t ti = k / n_s;
    const SensorConfig& sensor = scene.sensors[k % n_s];
    const double t = scene.timestamps[ti];
    const auto sid = static_cast<std::uint64_t>(sensor.sensor_id);
    LabeledSweep sweep = synth::simulate_sweep(scene, sensor.sensor_id, t, cfg.synth.radar_noise,
                                               synth::derive_seed(cfg.seed, 2, ti, sid));
    const std::size_t ghosts = sweep.size() == 0 ? 0 : cfg.synth.ghosts_per_sweep;
    sweep = synth::inject_artifacts(sweep, sensor, ghosts, cfg.synth.clutter_per_sweep, reflector_planes(),
                                    synth::derive_seed(cfg.seed, 3, ti, sid));
    for (RadarPoint& p : sweep.points.points) p.t = t;
    write_cloud_csv(sweep.points, c.lay.sweep(ti, sensor.sensor_id));
    synth::write_labels_csv(sweep, c.lay.sweep_labels(ti, sensor.sensor_id));
  });

  const std::size_t n_kf = scene.keyframes.size();
  std::vector<std::vector<metrics::Detection>> gt(n_kf);
  parallel_for(n_kf, cfg.jobs, [&](std::size_t j) {
    const double t = c.keyframe_t(j);
    const LabeledSweep lidar =
        synth::simulate_lidar(scene, t, cfg.synth.lidar_noise, synth::derive_seed(cfg.seed, 4, j));
    write_cloud_csv(lidar.points, c.lay.lidar(j));
    synth::write_labels_csv(lidar, c.lay.lidar_labels(j));
    const std::vector<Box3D> boxes = scene.boxes_in_reference(scene.keyframes[j]);
    write_text_file(c.lay.boxes(j), metrics::boxes_to_jsonl(boxes, frame_label(j)));
    for (const Box3D& b : boxes) gt[j].push_back(metrics::detection_from_box(b, frame_label(j)));
  });
  std::vector<metrics::Detection> all;
  for (auto& g : gt) all.insert(all.end(), g.begin(), g.end());
  metrics::write_detections(all, c.lay.gt());
  return "synth: " + std::to_string(n_t) + " timestamps x " + std::to_string(n_s) + " sensors, " +
         std::to_string(n_kf) + " keyframes, " + std::to_string(scene.objects.size()) + " objects";
}

// --- fuse --------------------------------------------------------------------

void fuse_frame(const Ctx& c, std::size_t j) {
  const synth::Scene& scene = c.scene;
  fusion::WindowSpec window = c.cfg.window;
  window.keyframe_t = c.keyframe_t(j);
  const std::vector<double> times = fusion::window_times(scene.timestamps, window);

  fusion::EgoPoseTable poses;
  for (std::size_t i = 0; i < scene.timestamps.size(); ++i) {
    poses.poses.emplace_back(scene.timestamps[i], scene.ego_poses[i]);
  }

  std::map<fusion::SweepKey, PointCloud> aligned;
  std::map<fusion::SweepKey, LabeledSweep> aligned_labels;
  std::string report = "sensor_id,t,retained,culled\n";
  PointCloud raw;
  raw.frame_id = std::string(synth::kReferenceFrame);
  for (const SensorConfig& sensor : scene.sensors) {
    for (double tau : times) {
      const std::size_t ti = scene.timestamp_index(tau);
      const LabeledSweep sweep =
          read_labeled(c.lay.sweep(ti, sensor.sensor_id), c.lay.sweep_labels(ti, sensor.sensor_id), "synth");
      fusion::AlignResult res = fusion::align_to_reference(sweep.points, sensor, synth::kReferenceFrame);
      LabeledSweep kept_labels;
      for (std::size_t i = 0; i < sweep.size(); ++i) {
        if (within_fov(sweep.points.points[i].position(), sensor.fov_effective_deg)) {
          kept_labels.labels.push_back(sweep.labels[i]);
          kept_labels.object_ids.push_back(sweep.object_ids[i]);
        }
      }
      report += std::to_string(sensor.sensor_id) + "," + fixed(tau) + "," + std::to_string(res.retained) + "," +
                std::to_string(res.culled) + "\n";
      if (std::abs(tau - window.keyframe_t) < 1e-9) {
        raw.points.insert(raw.points.end(), res.cloud.points.begin(), res.cloud.points.end());
      }
      aligned.emplace(fusion::SweepKey{sensor.sensor_id, tau}, std::move(res.cloud));
      aligned_labels.emplace(fusion::SweepKey{sensor.sensor_id, tau}, std::move(kept_labels));
    }
  }
  LabeledSweep fused;
  fused.points = fusion::compensate_and_accumulate(aligned, poses, window);
  for (const auto& [key, l] : aligned_labels) {
    fused.labels.insert(fused.labels.end(), l.labels.begin(), l.labels.end());
    fused.object_ids.insert(fused.object_ids.end(), l.object_ids.begin(), l.object_ids.end());
  }
  if (fused.labels.size() != fused.size()) {
    fail(ErrorCode::kInternal, "fused label count does not match point count");
  }
  write_cloud_csv(fused.points, c.lay.fused(j));
  synth::write_labels_csv(fused, c.lay.fused_labels(j));
  write_text_file(c.lay.fused_report(j), report);
  write_cloud_csv(raw, c.lay.fused_raw(j));
}

std::string stage_fuse(Ctx& c) {
  c.load_scene();
  c.each_frame([&](std::size_t j) { fuse_frame(c, j); });
  return "fuse: " + std::to_string(c.frames.size()) + " frames, " + std::to_string(c.cfg.window.sweep_count()) +
         " sweeps per sensor";
}

// --- validate ------------------------------------------------------------------

struct ValidateCounts {
  std::size_t input = 0;
  std::size_t kept = 0;
  std::array<std::size_t, 3> label_input{};
  std::array<std::size_t, 3> label_kept{};
};

ValidateCounts validate_frame(const Ctx& c, std::size_t j) {
  const PointCloud fused = read_input(c.lay.fused(j), "fuse");
  LabeledSweep labels;
  labels.points = fused;
  bool have_labels = fs::exists(c.lay.fused_labels(j));
  if (have_labels) synth::read_labels_csv(c.lay.fused_labels(j), labels);

  validation::ValidationResult res;
  if (c.cfg.validation_enabled) {
    res = validation::validate(validation::split_by_sensor(fused), c.cfg.validation);
  } else {
    res.cloud = fused;
    res.keep.assign(fused.size(), 1);
    for (const RadarPoint& p : fused.points) {
      auto& s = res.per_sensor[p.sensor_id];
      ++s.input;
      ++s.kept;
    }
  }
  res.cloud.frame_id = fused.frame_id;
  write_cloud_csv(res.cloud, c.lay.validated(j));
  std::string keep = "index,keep\n";
  for (std::size_t i = 0; i < res.keep.size(); ++i) {
    keep += std::to_string(i) + "," + std::to_string(int(res.keep[i])) + "\n";
  }
  write_text_file(c.lay.keep(j), keep);

  ValidateCounts counts;
  counts.input = fused.size();
  counts.kept = res.cloud.size();
  std::string summary = "group,key,input,kept,removed\n";
  for (const auto& [sid, s] : res.per_sensor) {
    summary += "sensor," + std::to_string(sid) + "," + std::to_string(s.input) + "," + std::to_string(s.kept) + "," +
               std::to_string(s.input - s.kept) + "\n";
  }
  if (have_labels) {
    for (std::size_t i = 0; i < labels.labels.size(); ++i) {
      const auto l = static_cast<std::size_t>(labels.labels[i]);
      ++counts.label_input[l];
      counts.label_kept[l] += res.keep[i];
    }
    for (PointLabel l : {PointLabel::kTrueReturn, PointLabel::kGhost, PointLabel::kClutter}) {
      const auto li = static_cast<std::size_t>(l);
      summary += "label," + std::string(synth::label_name(l)) + "," + std::to_string(counts.label_input[li]) + "," +
                 std::to_string(counts.label_kept[li]) + "," +
                 std::to_string(counts.label_input[li] - counts.label_kept[li]) + "\n";
    }
  }
  write_text_file(c.lay.validation_summary(j), summary);
  return counts;
}

std::vector<ValidateCounts> run_validate(Ctx& c) {
  std::vector<ValidateCounts> out(c.frames.size());
  parallel_for(c.frames.size(), c.cfg.jobs, [&](std::size_t i) { out[i] = validate_frame(c, c.frames[i]); });
  return out;
}

std::string stage_validate(Ctx& c) {
  c.load_scene();
  const auto counts = run_validate(c);
  ValidateCounts tot;
  for (const auto& v : counts) {
    tot.input += v.input;
    tot.kept += v.kept;
    for (std::size_t l = 0; l < 3; ++l) {
      tot.label_input[l] += v.label_input[l];
      tot.label_kept[l] += v.label_kept[l];
    }
  }
  return "validate: kept " + std::to_string(tot.kept) + "/" + std::to_string(tot.input) + " (true " +
         std::to_string(tot.label_kept[0]) + "/" + std::to_string(tot.label_input[0]) + ", ghost " +
         std::to_string(tot.label_kept[1]) + "/" + std::to_string(tot.label_input[1]) + ", clutter " +
         std::to_string(tot.label_kept[2]) + "/" + std::to_string(tot.label_input[2]) + ")";
}

// --- rasterize / make-target ---------------------------------------------------

std::string stage_rasterize(Ctx& c) {
  c.load_scene();
  std::atomic<std::size_t> skipped{0};
  c.each_frame([&](std::size_t j) {
    const PointCloud validated = read_input(c.lay.validated(j), "validate");
    const bev::RasterResult r = bev::rasterize(validated, c.cfg.grid);
    skipped += r.skipped;
    bev::write_pgm(r.grid, c.lay.bev(j));
  });
  return "rasterize: " + std::to_string(c.frames.size()) + " grids, " + std::to_string(skipped.load()) +
         " points outside the grid";
}

void target_frame(const Ctx& c, std::size_t j) {
  const PointCloud validated = read_input(c.lay.validated(j), "validate");
  const PointCloud lidar = read_input(c.lay.lidar(j), "synth");
  const std::vector<Box3D> boxes = read_boxes(c.lay.boxes(j));

  supervision::GroundParams gp = c.cfg.ground;
  gp.seed = synth::derive_seed(c.cfg.seed, 5, j);
  const supervision::GroundResult ground = supervision::remove_ground(lidar, gp);
  if (ground.used_fallback) say(c.opt, "make-target " + frame_label(j) + ": plane fit failed, used z threshold");
  const auto fg = supervision::extract_box_foreground(ground.cloud, boxes);
  const supervision::PseudoForeground pseudo =
      supervision::make_pseudo_radar_fg(fg, validated, boxes, c.keyframe_t(j));
  const supervision::SupervisionTarget target = supervision::inject_foreground(validated, pseudo.cloud);

  write_cloud_csv(target.target_cloud, c.lay.target(j));
  std::string mask = "index,fg\n";
  for (std::size_t i = 0; i < target.fg_mask.size(); ++i) {
    mask += std::to_string(i) + "," + std::to_string(int(target.fg_mask[i])) + "\n";
  }
  write_text_file(c.lay.target_mask(j), mask);
  bev::write_pgm(bev::rasterize(target.target_cloud, c.cfg.grid).grid, c.lay.target_pgm(j));

  std::string report = "box_id,category,lidar_points,radar_points,mean_rcs,mean_doppler,fallback\n";
  for (const Box3D& b : boxes) {
    const auto it = pseudo.per_box.find(b.id);
    const auto fit = fg.find(b.id);
    const std::size_t n_lidar = fit == fg.end() ? 0 : fit->second.size();
    supervision::BoxAttributes a;
    if (it != pseudo.per_box.end()) a = it->second;
    report += std::to_string(b.id) + "," + std::string(category_name(b.category)) + "," + std::to_string(n_lidar) +
              "," + std::to_string(a.radar_points) + "," + format_double(a.mean_rcs) + "," +
              format_double(a.mean_doppler) + "," + (a.fallback ? "1" : "0") + "\n";
  }
  write_text_file(c.lay.target_boxes(j), report);
}

std::string stage_make_target(Ctx& c) {
  c.load_scene();
  c.each_frame([&](std::size_t j) { target_frame(c, j); });
  return "make-target: " + std::to_string(c.frames.size()) + " targets";
}

// --- enhance / lift / deraster -----------------------------------------------

std::string stage_enhance(Ctx& c) {
  c.load_scene();
  c.each_frame([&](std::size_t j) {
    require_artifact(c.lay.bev(j), "rasterize");
    const bev::BEVGrid condition = bev::read_pgm(c.lay.bev(j));
    if (!(condition.spec == c.cfg.grid)) {
      fail(ErrorCode::kConfig, c.lay.bev(j).string() + ": grid geometry differs from the configured grid");
    }
    enhance::EnhancerSpec spec = c.cfg.enhancer;
    spec.work_dir = c.lay.work(j);
    std::optional<bev::BEVGrid> target;
    if (spec.kind == enhance::EnhancerKind::kOracle) {
      require_artifact(c.lay.target_pgm(j), "make-target");
      target = bev::read_pgm(c.lay.target_pgm(j));
    }
    const bev::BEVGrid out = enhance::enhance(condition, spec, target ? &*target : nullptr);
    bev::write_pgm(out, c.lay.enhanced(j));
  });
  return "enhance: " + std::string(enhance::enhancer_name(c.cfg.enhancer.kind)) + " on " +
         std::to_string(c.frames.size()) + " frames";
}

std::uint8_t tau_byte(const PipelineConfig& cfg) { return static_cast<std::uint8_t>(cfg.tau_int); }

std::string stage_lift(Ctx& c) {
  c.load_scene();
  std::atomic<std::size_t> total{0};
  c.each_frame([&](std::size_t j) {
    require_artifact(c.lay.enhanced(j), "enhance");
    const bev::BEVGrid enhanced = bev::read_pgm(c.lay.enhanced(j));
    const PointCloud validated = read_input(c.lay.validated(j), "validate");
    const enhance::HyperCloud hyper =
        enhance::assemble_hyper_cloud(enhanced, validated, tau_byte(c.cfg), c.cfg.union_raw);
    total += hyper.size();
    enhance::write_hyper_csv(hyper, c.lay.hyper(j));
  });
  return "lift: " + std::to_string(total.load()) + " hyper points over " + std::to_string(c.frames.size()) +
         " frames";
}

std::string stage_deraster(Ctx& c) {
  c.load_scene();
  c.each_frame([&](std::size_t j) {
    require_artifact(c.lay.enhanced(j), "enhance");
    const auto fg = bev::derasterize(bev::read_pgm(c.lay.enhanced(j)), tau_byte(c.cfg));
    std::string out = "x,y,confidence\n";
    for (const auto& p : fg) out += format_double(p.x) + "," + format_double(p.y) + "," + format_double(p.confidence) + "\n";
    write_text_file(c.lay.deraster(j), out);
  });
  return "deraster: " + std::to_string(c.frames.size()) + " frames at threshold " + std::to_string(c.cfg.tau_int);
}

// --- evaluation ------------------------------------------------------------------

struct GeomSummary {
  std::optional<double> chamfer, hausdorff, fscore;
};

GeomSummary run_eval_geom(Ctx& c) {
  std::vector<std::optional<metrics::GeomReport>> reports(c.frames.size());
  std::vector<std::pair<std::size_t, std::size_t>> sizes(c.frames.size());
  parallel_for(c.frames.size(), c.cfg.jobs, [&](std::size_t i) {
    const std::size_t j = c.frames[i];
    require_artifact(c.lay.hyper(j), "lift");
    const PointCloud pred = enhance::read_hyper_csv(c.lay.hyper(j)).to_point_cloud();
    PointCloud target = read_input(c.lay.target(j), "make-target");
    std::erase_if(target.points, [&](const RadarPoint& p) { return !bev::pixel_of(c.cfg.grid, p.x, p.y); });
    sizes[i] = {pred.size(), target.size()};
    if (pred.empty() || target.empty()) return;
    const auto a = xy_of(pred);
    const auto b = xy_of(target);
    reports[i] = metrics::geometry_report(a, b, c.cfg.fscore_tau, c.cfg.cd_root);
  });
  std::string csv = "frame,pred_points,target_points,chamfer,hausdorff,fscore,precision,recall\n";
  GeomSummary s;
  double cd = 0.0, hd = 0.0, f = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < c.frames.size(); ++i) {
    csv += frame_label(c.frames[i]) + "," + std::to_string(sizes[i].first) + "," + std::to_string(sizes[i].second);
    if (const auto& r = reports[i]) {
      csv += "," + format_double(r->chamfer) + "," + format_double(r->hausdorff) + "," + format_double(r->fscore) +
             "," + format_double(r->precision) + "," + format_double(r->recall) + "\n";
      cd += r->chamfer;
      hd += r->hausdorff;
      f += r->fscore;
      ++n;
    } else {
      csv += ",n/a,n/a,n/a,n/a,n/a\n";
      say(c.opt, "eval-geom " + frame_label(c.frames[i]) + ": empty point set, metrics undefined");
    }
  }
  if (n > 0) {
    s.chamfer = cd / double(n);
    s.hausdorff = hd / double(n);
    s.fscore = f / double(n);
    csv += "mean,,," + format_double(*s.chamfer) + "," + format_double(*s.hausdorff) + "," +
           format_double(*s.fscore) + ",,\n";
  }
  write_text_file(c.lay.geom_report(), csv);
  return s;
}

std::string stage_eval_geom(Ctx& c) {
  c.load_scene();
  const GeomSummary s = run_eval_geom(c);
  return "eval-geom: chamfer " + opt_fixed(s.chamfer) + (c.cfg.cd_root ? " m" : " m^2") + ", hausdorff " +
         opt_fixed(s.hausdorff) + " m, fscore@" + fixed(c.cfg.fscore_tau, 3) + " " + opt_fixed(s.fscore);
}

std::vector<metrics::FgRow> run_report_fg(Ctx& c) {
  std::vector<metrics::FgFrame> frames(c.frames.size());
  parallel_for(c.frames.size(), c.cfg.jobs, [&](std::size_t i) {
    const std::size_t j = c.frames[i];
    require_artifact(c.lay.hyper(j), "lift");
    frames[i].raw = read_input(c.lay.fused_raw(j), "fuse");
    frames[i].enhanced = enhance::read_hyper_csv(c.lay.hyper(j)).to_point_cloud();
    frames[i].boxes = read_boxes(c.lay.boxes(j));
  });
  const auto rows = metrics::fg_boost_report(frames, c.cfg.eval.categories);
  write_text_file(c.lay.fg_report(), metrics::fg_report_csv(rows));
  return rows;
}

std::string stage_report_fg(Ctx& c) {
  c.load_scene();
  return "report-fg:\n" + metrics::fg_report_table(run_report_fg(c));
}

std::string stage_eval_det(const PipelineConfig& cfg, const Layout& lay) {
  if (cfg.pred_path.empty()) fail(ErrorCode::kConfig, "eval-det needs a prediction file (eval.pred / --pred)");
  const fs::path gt_path = cfg.gt_path.empty() ? lay.gt() : cfg.gt_path;
  require_artifact(cfg.pred_path, "a detector");
  require_artifact(gt_path, "synth");
  const auto preds = metrics::read_detections(cfg.pred_path);
  const auto gts = metrics::read_detections(gt_path);
  const metrics::MapReport r = metrics::map_score(preds, gts, cfg.eval);
  write_text_file(lay.det_report(), metrics::map_report_csv(r, cfg.eval));
  std::string out;
  for (const std::string& w : r.warnings) out += "warning: " + w + "\n";
  return out + metrics::map_report_table(r, cfg.eval);
}

std::string dispatch(std::string_view name, Ctx& c) {
  if (name == "synth") return stage_synth(c);
  if (name == "fuse") return stage_fuse(c);
  if (name == "validate") return stage_validate(c);
  if (name == "rasterize") return stage_rasterize(c);
  if (name == "make-target") return stage_make_target(c);
  if (name == "enhance") return stage_enhance(c);
  if (name == "lift") return stage_lift(c);
  if (name == "deraster") return stage_deraster(c);
  if (name == "eval-geom") return stage_eval_geom(c);
  if (name == "report-fg") return stage_report_fg(c);
  if (name == "eval-det") return stage_eval_det(c.cfg, c.lay);
  fail(ErrorCode::kInvalidArgument, "unknown stage '" + std::string(name) + "'");
}

}  // namespace

// --- layout --------------------------------------------------------------------

Layout::Layout(const PipelineConfig& cfg, const StageOptions& opt)
    : out(cfg.out_dir), synth(opt.synth_root.empty() ? cfg.out_dir : opt.synth_root) {}

std::string frame_label(std::size_t frame) { return "f" + idx4(frame); }

fs::path Layout::scene() const { return synth / "scene.json"; }
fs::path Layout::sweep(std::size_t ti, int s) const {
  return synth / "sweeps" / ("t" + idx4(ti) + "_s" + std::to_string(s) + ".csv");
}
fs::path Layout::sweep_labels(std::size_t ti, int s) const {
  return synth / "sweeps" / ("t" + idx4(ti) + "_s" + std::to_string(s) + ".labels");
}
fs::path Layout::lidar(std::size_t j) const { return synth / "lidar" / (frame_label(j) + ".csv"); }
fs::path Layout::lidar_labels(std::size_t j) const { return synth / "lidar" / (frame_label(j) + ".labels"); }
fs::path Layout::boxes(std::size_t j) const { return synth / "boxes" / (frame_label(j) + ".jsonl"); }
fs::path Layout::gt() const { return synth / "boxes" / "gt.jsonl"; }
fs::path Layout::fused(std::size_t j) const { return out / "fused" / (frame_label(j) + ".csv"); }
fs::path Layout::fused_labels(std::size_t j) const { return out / "fused" / (frame_label(j) + ".labels"); }
fs::path Layout::fused_report(std::size_t j) const { return out / "fused" / (frame_label(j) + "_report.csv"); }
fs::path Layout::fused_raw(std::size_t j) const { return out / "fused" / (frame_label(j) + "_raw.csv"); }
fs::path Layout::validated(std::size_t j) const { return out / "validated" / (frame_label(j) + ".csv"); }
fs::path Layout::keep(std::size_t j) const { return out / "validated" / (frame_label(j) + "_keep.csv"); }
fs::path Layout::validation_summary(std::size_t j) const {
  return out / "validated" / (frame_label(j) + "_summary.csv");
}
fs::path Layout::bev(std::size_t j) const { return out / "bev" / (frame_label(j) + ".pgm"); }
fs::path Layout::target(std::size_t j) const { return out / "target" / (frame_label(j) + ".csv"); }
fs::path Layout::target_mask(std::size_t j) const { return out / "target" / (frame_label(j) + "_mask.csv"); }
fs::path Layout::target_pgm(std::size_t j) const { return out / "target" / (frame_label(j) + ".pgm"); }
fs::path Layout::target_boxes(std::size_t j) const { return out / "target" / (frame_label(j) + "_boxes.csv"); }
fs::path Layout::enhanced(std::size_t j) const { return out / "enhanced" / (frame_label(j) + ".pgm"); }
fs::path Layout::hyper(std::size_t j) const { return out / "hyper" / (frame_label(j) + ".csv"); }
fs::path Layout::deraster(std::size_t j) const { return out / "deraster" / (frame_label(j) + ".csv"); }
fs::path Layout::work(std::size_t j) const { return out / "work" / frame_label(j); }
fs::path Layout::geom_report() const { return out / "eval" / "geom.csv"; }
fs::path Layout::det_report() const { return out / "eval" / "det.csv"; }
fs::path Layout::fg_report() const { return out / "eval" / "fg_boost.csv"; }
fs::path Layout::manifest() const { return out / "manifest.txt"; }

// --- stages ------------------------------------------------------------------------

std::string run_stage(std::string_view name, const PipelineConfig& cfg, const StageOptions& opt) {
  cfg.check();
  Ctx c(cfg, opt);
  std::string report = dispatch(name, c);
  write_manifest(cfg.out_dir);
  say(opt, report);
  return report;
}

std::string run_all(const PipelineConfig& cfg, const StageOptions& opt) {
  cfg.check();
  Ctx c(cfg, opt);
  std::string report;
  for (const std::string& name : stage_names()) {
    if (name == "eval-det" && cfg.pred_path.empty()) continue;
    if (name == "synth" && !opt.synth_root.empty()) continue;
    std::string r = dispatch(name, c);
    say(opt, r);
    report += r + "\n";
  }
  write_manifest(cfg.out_dir);
  return report;
}

// --- manifest ----------------------------------------------------------------------

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::kInternal, "sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

std::string build_manifest(const fs::path& out_dir) {
  std::vector<std::string> rel;
  if (fs::exists(out_dir)) {
    for (auto it = fs::recursive_directory_iterator(out_dir); it != fs::recursive_directory_iterator(); ++it) {
      const fs::path r = fs::relative(it->path(), out_dir);
      if (it->is_directory()) {
        if (r == "work") it.disable_recursion_pending();
        continue;
      }
      if (!it->is_regular_file() || r == "manifest.txt") continue;
      rel.push_back(r.generic_string());
    }
  }
  std::sort(rel.begin(), rel.end());
  std::string out;
  for (const std::string& r : rel) out += sha256_hex(read_text_file(out_dir / r)) + "  " + r + "\n";
  return out;
}

std::string write_manifest(const fs::path& out_dir) {
  std::string m = build_manifest(out_dir);
  write_text_file(out_dir / "manifest.txt", m);
  return m;
}

// --- ablation ----------------------------------------------------------------------

AblationAxes parse_axes(std::string_view text) {
  AblationAxes axes;
  for (std::string_view tok : split(text, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    if (tok == "no-accumulation") {
      axes.no_accumulation = true;
    } else if (tok == "no-validation") {
      axes.no_validation = true;
    } else if (tok.starts_with("enhancer=")) {
      for (auto v : split(tok.substr(9), '|')) axes.enhancers.push_back(enhance::parse_enhancer(v));
    } else if (tok.starts_with("threshold=")) {
      for (auto v : split(tok.substr(10), '|')) {
        const long long t = parse_int(trim(v));
        if (t < 0 || t > 255) fail(ErrorCode::kConfig, "ablation threshold must be in [0, 255]");
        axes.thresholds.push_back(static_cast<int>(t));
      }
    } else {
      fail(ErrorCode::kConfig, "unknown ablation axis '" + std::string(tok) + "'");
    }
  }
  return axes;
}

std::vector<AblationRow> run_ablation(const PipelineConfig& cfg, const AblationAxes& axes,
                                      const StageOptions& opt) {
  cfg.check();
  StageOptions synth_opt = opt;
  synth_opt.synth_root.clear();
  PipelineConfig base = cfg;
  {
    Ctx c(base, synth_opt);
    say(opt, stage_synth(c));
  }

  std::vector<bool> accum = {true};
  if (axes.no_accumulation) accum.push_back(false);
  std::vector<bool> valid = {true};
  if (axes.no_validation) valid.push_back(false);
  std::vector<enhance::EnhancerKind> enh = axes.enhancers;
  if (enh.empty()) enh.push_back(cfg.enhancer.kind);
  std::vector<int> thr = axes.thresholds;
  if (thr.empty()) thr.push_back(cfg.tau_int);

  std::vector<AblationRow> rows;
  for (bool a : accum) {
    for (bool v : valid) {
      for (auto e : enh) {
        for (int t : thr) {
          AblationRow row;
          row.accumulation = a;
          row.validation = v;
          row.enhancer = e;
          row.threshold = t;
          row.name = std::string(a ? "" : "no-accumulation+") + (v ? "" : "no-validation+") +
                     std::string(enhance::enhancer_name(e)) + "@" + std::to_string(t);
          rows.push_back(row);
        }
      }
    }
  }

  for (std::size_t i = 0; i < rows.size(); ++i) {
    AblationRow& row = rows[i];
    PipelineConfig cell = cfg;
    cell.out_dir = cfg.out_dir / "ablation" / ("cell" + idx4(i));
    if (!row.accumulation) cell.window.window_seconds = 0.0;
    cell.validation_enabled = row.validation;
    cell.enhancer.kind = row.enhancer;
    cell.tau_int = row.threshold;
    cell.check();
    StageOptions cell_opt = opt;
    cell_opt.synth_root = cfg.out_dir;
    Ctx c(cell, cell_opt);
    c.load_scene();
    say(opt, "ablation " + row.name);
    stage_fuse(c);
    for (const auto& v : run_validate(c)) {
      row.fused_points += v.input;
      row.validated_points += v.kept;
      row.surviving_true += v.label_kept[0];
      row.surviving_ghost += v.label_kept[1];
      row.surviving_clutter += v.label_kept[2];
    }
    stage_rasterize(c);
    stage_make_target(c);
    stage_enhance(c);
    stage_lift(c);
    for (std::size_t j : c.frames) row.hyper_points += enhance::read_hyper_csv(c.lay.hyper(j)).size();
    const GeomSummary g = run_eval_geom(c);
    row.chamfer = g.chamfer;
    row.hausdorff = g.hausdorff;
    row.fscore = g.fscore;
    const auto fg = run_report_fg(c);
    row.fg_raw_avg = fg.back().raw_avg;
    row.fg_added_avg = fg.back().added_avg;
    row.fg_boost = fg.back().boost;
    write_manifest(cell.out_dir);
  }
  write_text_file(cfg.out_dir / "ablation.csv", ablation_csv(rows));
  write_manifest(cfg.out_dir);
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out =
      "config,accumulation,validation,enhancer,threshold,fused_points,validated_points,surviving_true,"
      "surviving_ghost,surviving_clutter,hyper_points,chamfer,hausdorff,fscore,fg_raw_avg,fg_added_avg,fg_boost\n";
  for (const AblationRow& r : rows) {
    out += r.name + "," + (r.accumulation ? "on" : "off") + "," + (r.validation ? "on" : "off") + "," +
           std::string(enhance::enhancer_name(r.enhancer)) + "," + std::to_string(r.threshold) + "," +
           std::to_string(r.fused_points) + "," + std::to_string(r.validated_points) + "," +
           std::to_string(r.surviving_true) + "," + std::to_string(r.surviving_ghost) + "," +
           std::to_string(r.surviving_clutter) + "," + std::to_string(r.hyper_points) + "," + opt_fixed(r.chamfer) +
           "," + opt_fixed(r.hausdorff) + "," + opt_fixed(r.fscore) + "," + fixed(r.fg_raw_avg) + "," +
           fixed(r.fg_added_avg) + "," + opt_fixed(r.fg_boost) + "\n";
  }
  return out;
}

// --- worker pool ---------------------------------------------------------------------

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = n;
  std::exception_ptr failure;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (failed_at < i) return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace hyperdet::pipeline
