#include "hyperdet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "hyperdet/error.hpp"
#include "hyperdet/io.hpp"
#include "hyperdet/neighbor_index.hpp"
#include "json.hpp"

namespace hyperdet::metrics {

namespace {

constexpr double kPlanarCell = 1.0;

void require_nonempty(PointSet a, PointSet b) {
  if (a.empty() || b.empty()) {
    fail(ErrorCode::kInvalidArgument, "geometric metrics are undefined for an empty point set");
  }
}

/// For each point of `from`, the squared distance to its nearest point in `to`.
std::vector<double> nearest_sq(PointSet from, PointSet to) {
  const NeighborIndex index = NeighborIndex::build_planar(to, kPlanarCell);
  std::vector<double> out;
  out.reserve(from.size());
  for (const Vec2& p : from) {
    const Vec3 q(p.x(), p.y(), 0.0);
    out.push_back(squared_distance(q, index.point(*index.nearest(q))));
  }
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

double matched_fraction(const std::vector<double>& d2, double tau) {
  std::size_t n = 0;
  for (double x : d2) n += std::sqrt(x) <= tau ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(d2.size());
}

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

double bev_range(const Vec3& c) { return std::sqrt(c.x() * c.x() + c.y() * c.y()); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

}  // namespace

double chamfer(PointSet a, PointSet b, bool root) {
  require_nonempty(a, b);
  auto ab = nearest_sq(a, b);
  auto ba = nearest_sq(b, a);
  if (root) {
    for (double& x : ab) x = std::sqrt(x);
    for (double& x : ba) x = std::sqrt(x);
  }
  return mean(ab) + mean(ba);
}

double hausdorff(PointSet a, PointSet b) {
  require_nonempty(a, b);
  return std::sqrt(std::max(max_of(nearest_sq(a, b)), max_of(nearest_sq(b, a))));
}

double fscore(PointSet a, PointSet b, double tau_match) {
  require_nonempty(a, b);
  if (!(tau_match > 0.0)) fail(ErrorCode::kInvalidArgument, "F-score threshold must be > 0");
  return harmonic(matched_fraction(nearest_sq(a, b), tau_match),
                  matched_fraction(nearest_sq(b, a), tau_match));
}

GeomReport geometry_report(PointSet pred, PointSet target, double tau_match, bool chamfer_root) {
  GeomReport r;
  r.chamfer = chamfer(pred, target, chamfer_root);
  r.hausdorff = hausdorff(pred, target);
  r.fscore = fscore(pred, target, tau_match);
  r.precision = matched_fraction(nearest_sq(pred, target), tau_match);
  r.recall = matched_fraction(nearest_sq(target, pred), tau_match);
  r.match_tau = tau_match;
  r.chamfer_root = chamfer_root;
  return r;
}

// --- Foreground boost ------------------------------------------------------

std::vector<FgRow> fg_boost_report(std::span<const FgFrame> frames,
                                   std::span<const Category> categories) {
  auto in_boxes = [](const PointCloud& c, const std::vector<const Box3D*>& boxes) {
    std::size_t n = 0;
    for (const Box3D* b : boxes) {
      for (const RadarPoint& p : c.points) n += point_in_box(p.position(), *b) ? 1 : 0;
    }
    return n;
  };

  auto make_row = [&](std::string name, auto&& select) {
    FgRow row;
    row.name = std::move(name);
    double raw_sum = 0.0, added_sum = 0.0, ratio_sum = 0.0;
    std::size_t ratio_frames = 0;
    for (const FgFrame& f : frames) {
      std::vector<const Box3D*> boxes;
      for (const Box3D& b : f.boxes) {
        if (select(b.category)) boxes.push_back(&b);
      }
      if (boxes.empty()) continue;
      ++row.frames;
      const double raw = static_cast<double>(in_boxes(f.raw, boxes));
      const double enh = static_cast<double>(in_boxes(f.enhanced, boxes));
      raw_sum += raw;
      added_sum += enh - raw;
      if (raw > 0.0) {
        ratio_sum += (enh - raw) / raw;
        ++ratio_frames;
      }
    }
    if (row.frames > 0) {
      row.raw_avg = raw_sum / static_cast<double>(row.frames);
      row.added_avg = added_sum / static_cast<double>(row.frames);
    }
    if (ratio_frames > 0) row.boost = ratio_sum / static_cast<double>(ratio_frames);
    return row;
  };

  std::vector<FgRow> rows;
  for (Category c : categories) {
    rows.push_back(make_row(std::string(category_name(c)), [c](Category x) { return x == c; }));
  }
  rows.push_back(make_row("total", [&](Category x) {
    return std::find(categories.begin(), categories.end(), x) != categories.end();
  }));
  return rows;
}

std::string fg_report_csv(const std::vector<FgRow>& rows) {
  std::string out = "category,frames,raw_avg,added_avg,boost\n";
  for (const FgRow& r : rows) {
    out += r.name + "," + std::to_string(r.frames) + "," + fmt("%.6f", r.raw_avg) + "," +
           fmt("%.6f", r.added_avg) + "," + (r.boost ? fmt("%.6f", *r.boost) : std::string("n/a")) + "\n";
  }
  return out;
}

std::string fg_report_table(const std::vector<FgRow>& rows) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-16s %7s %10s %11s %10s\n", "class", "frames", "raw avg", "added avg",
                "boost");
  out += line;
  for (const FgRow& r : rows) {
    const std::string boost = r.boost ? fmt("%.2f%%", *r.boost * 100.0) : std::string("n/a");
    std::snprintf(line, sizeof(line), "%-16s %7zu %10.2f %+11.2f %10s\n", r.name.c_str(), r.frames, r.raw_avg,
                  r.added_avg, boost.c_str());
    out += line;
  }
  return out;
}

// --- Detection AP ------------------------------------------------------------

void DetEvalConfig::check() const {
  if (dist_thresholds.empty()) fail(ErrorCode::kConfig, "need at least one distance threshold");
  for (std::size_t i = 0; i < dist_thresholds.size(); ++i) {
    if (!(dist_thresholds[i] > 0.0)) fail(ErrorCode::kConfig, "distance thresholds must be > 0");
    if (i > 0 && dist_thresholds[i] < dist_thresholds[i - 1]) {
      fail(ErrorCode::kConfig, "distance thresholds must be sorted ascending");
    }
  }
  if (!(max_range > 0.0)) fail(ErrorCode::kConfig, "max_range must be > 0");
}

namespace {

// np.interp(x, xp, fp, right=0) for non-decreasing xp.
double interp(double x, const std::vector<double>& xp, const std::vector<double>& fp) {
  if (x > xp.back()) return 0.0;
  if (x < xp.front()) return fp.front();
  // Largest j with xp[j] <= x.
  const auto j = static_cast<std::size_t>(std::upper_bound(xp.begin(), xp.end(), x) - xp.begin()) - 1;
  if (j + 1 == xp.size() || xp[j] == x) return fp[j];
  const double slope = (fp[j + 1] - fp[j]) / (xp[j + 1] - xp[j]);
  return slope * (x - xp[j]) + fp[j];
}

}  // namespace

std::optional<double> average_precision(std::span<const Detection> preds,
                                        std::span<const Detection> gts, double dist,
                                        Category category, const DetEvalConfig& cfg) {
  std::vector<const Detection*> gt;
  for (const Detection& g : gts) {
    if (g.category == category && bev_range(g.center) <= cfg.max_range) gt.push_back(&g);
  }
  if (gt.empty()) return std::nullopt;

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].category == category && bev_range(preds[i].center) <= cfg.max_range) order.push_back(i);
  }
  if (order.empty()) return 0.0;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });

  std::vector<std::uint8_t> taken(gt.size(), 0);
  std::vector<double> precision, recall;
  std::size_t tp = 0, fp = 0;
  for (std::size_t pi : order) {
    const Detection& p = preds[pi];
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_gt = gt.size();
    for (std::size_t gi = 0; gi < gt.size(); ++gi) {
      if (taken[gi] || gt[gi]->frame_id != p.frame_id) continue;
      const double dx = gt[gi]->center.x() - p.center.x();
      const double dy = gt[gi]->center.y() - p.center.y();
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d < best) {
        best = d;
        best_gt = gi;
      }
    }
    if (best_gt < gt.size() && best <= dist) {
      taken[best_gt] = 1;
      ++tp;
    } else {
      ++fp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(gt.size()));
  }

  if (cfg.method == ApMethod::kInterp101) {
    double sum = 0.0;
    for (int i = 0; i <= 100; ++i) {
      const double r = i / 100.0;
      double best = 0.0;
      for (std::size_t k = 0; k < recall.size(); ++k) {
        if (recall[k] >= r) best = std::max(best, precision[k]);
      }
      sum += best;
    }
    return sum / 101.0;
  }

  constexpr double kMinRecall = 0.1;
  constexpr double kMinPrecision = 0.1;
  double sum = 0.0;
  int n = 0;
  for (int i = static_cast<int>(std::lround(100 * kMinRecall)) + 1; i <= 100; ++i) {
    const double p = interp(i / 100.0, recall, precision) - kMinPrecision;
    sum += std::max(p, 0.0);
    ++n;
  }
  return (sum / n) / (1.0 - kMinPrecision);
}

MapReport map_score(std::span<const Detection> preds, std::span<const Detection> gts,
                    const DetEvalConfig& cfg) {
  cfg.check();
  MapReport r;
  double sum = 0.0;
  std::size_t n = 0;
  for (Category c : cfg.categories) {
    bool any = false;
    for (double d : cfg.dist_thresholds) {
      const auto ap = average_precision(preds, gts, d, c, cfg);
      if (!ap) break;
      any = true;
      r.ap[c][d] = *ap;
      sum += *ap;
      ++n;
    }
    if (!any) {
      r.warnings.push_back("no ground truth for category '" + std::string(category_name(c)) +
                           "' within range; excluded from mAP");
    }
  }
  r.map = n > 0 ? sum / static_cast<double>(n) : 0.0;
  return r;
}

std::string map_report_csv(const MapReport& r, const DetEvalConfig& cfg) {
  std::string out = "category";
  for (double d : cfg.dist_thresholds) out += ",ap@" + fmt("%g", d);
  out += ",mean\n";
  for (const auto& [c, per] : r.ap) {
    out += std::string(category_name(c));
    double s = 0.0;
    for (double d : cfg.dist_thresholds) {
      out += "," + fmt("%.6f", per.at(d));
      s += per.at(d);
    }
    out += "," + fmt("%.6f", s / static_cast<double>(cfg.dist_thresholds.size())) + "\n";
  }
  out += "mAP";
  for (std::size_t i = 0; i < cfg.dist_thresholds.size(); ++i) out += ",";
  out += "," + fmt("%.6f", r.map) + "\n";
  return out;
}

std::string map_report_table(const MapReport& r, const DetEvalConfig& cfg) {
  std::string out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-16s", "class");
  out += buf;
  for (double d : cfg.dist_thresholds) {
    std::snprintf(buf, sizeof(buf), " %8s", ("AP@" + fmt("%g", d)).c_str());
    out += buf;
  }
  out += "\n";
  for (const auto& [c, per] : r.ap) {
    std::snprintf(buf, sizeof(buf), "%-16s", std::string(category_name(c)).c_str());
    out += buf;
    for (double d : cfg.dist_thresholds) {
      std::snprintf(buf, sizeof(buf), " %8.4f", per.at(d));
      out += buf;
    }
    out += "\n";
  }
  out += "mAP " + fmt("%.4f", r.map) + "\n";
  return out;
}

Detection detection_from_box(const Box3D& box, std::string frame_id, double score) {
  Detection d;
  d.frame_id = std::move(frame_id);
  d.category = box.category;
  d.center = box.center;
  d.size = box.size;
  d.yaw = box.yaw;
  d.score = score;
  return d;
}

namespace {

Vec3 vec3_field(const nlohmann::json& j, const char* key) {
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) fail(ErrorCode::kFormat, std::string(key) + " must be a 3-array");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

Category category_field(const nlohmann::json& j) {
  const auto c = parse_category(j.at("category").get<std::string>());
  if (!c) fail(ErrorCode::kFormat, "unknown category '" + j.at("category").get<std::string>() + "'");
  return *c;
}

template <typename Fn>
void for_each_json_line(std::string_view text, std::string_view origin, Fn&& fn) {
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    try {
      fn(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kFormat, std::string(origin) + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorCode::kFormat, std::string(origin) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace

std::string detections_to_jsonl(std::span<const Detection> dets) {
  std::string out;
  for (const Detection& d : dets) {
    nlohmann::ordered_json j;
    j["frame_id"] = d.frame_id;
    j["category"] = category_name(d.category);
    j["center"] = {d.center.x(), d.center.y(), d.center.z()};
    j["size"] = {d.size.x(), d.size.y(), d.size.z()};
    j["yaw"] = d.yaw;
    j["score"] = d.score;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<Detection> detections_from_jsonl(std::string_view text, std::string_view origin) {
  std::vector<Detection> out;
  for_each_json_line(text, origin, [&](const nlohmann::json& j) {
    Detection d;
    d.frame_id = j.at("frame_id").get<std::string>();
    d.category = category_field(j);
    d.center = vec3_field(j, "center");
    d.size = j.contains("size") ? vec3_field(j, "size") : Vec3::Ones();
    d.yaw = j.value("yaw", 0.0);
    d.score = j.value("score", 1.0);
    if (!std::isfinite(d.score)) fail(ErrorCode::kFormat, "score must be finite");
    out.push_back(std::move(d));
  });
  return out;
}

std::vector<Detection> read_detections(const std::filesystem::path& path) {
  return detections_from_jsonl(read_text_file(path), path.string());
}

void write_detections(std::span<const Detection> dets, const std::filesystem::path& path) {
  write_text_file(path, detections_to_jsonl(dets));
}

std::string boxes_to_jsonl(std::span<const Box3D> boxes, std::string_view frame_id) {
  std::string out;
  for (const Box3D& b : boxes) {
    nlohmann::ordered_json j;
    j["frame_id"] = frame_id;
    j["id"] = b.id;
    j["category"] = category_name(b.category);
    j["center"] = {b.center.x(), b.center.y(), b.center.z()};
    j["size"] = {b.size.x(), b.size.y(), b.size.z()};
    j["yaw"] = b.yaw;
    j["velocity"] = {b.velocity.x(), b.velocity.y()};
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<Box3D> boxes_from_jsonl(std::string_view text, std::string_view origin) {
  std::vector<Box3D> out;
  for_each_json_line(text, origin, [&](const nlohmann::json& j) {
    Box3D b;
    b.id = j.value("id", static_cast<int>(out.size()));
    b.category = category_field(j);
    b.center = vec3_field(j, "center");
    b.size = vec3_field(j, "size");
    b.yaw = normalize_yaw(j.value("yaw", 0.0));
    if (j.contains("velocity")) {
      b.velocity = Vec2(j.at("velocity").at(0).get<double>(), j.at("velocity").at(1).get<double>());
    }
    b.check();
    out.push_back(b);
  });
  return out;
}

}  // namespace hyperdet::metrics
