// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hyperdet/hyperdet.h"

namespace {

int exit_code(hd_status s) {
  switch (s) {
    case HD_OK: return 0;
    case HD_ERR_CONFIG: return 2;
    case HD_ERR_MISSING_ARTIFACT: return 3;
    case HD_ERR_EXTERNAL_ENHANCER: return 4;
    default: return 1;
  }
}

int report(hd_status s) {
  if (s != HD_OK) std::fprintf(stderr, "hyperdet: %s: %s\n", hd_status_name(s), hd_last_error());
  return exit_code(s);
}

void print_line(const char* msg, void* user) {
  if (user != nullptr) return;
  std::fputs(msg, stdout);
  const std::size_t n = std::char_traits<char>::length(msg);
  if (n == 0 || msg[n - 1] != '\n') std::fputc('\n', stdout);
  std::fflush(stdout);
}

struct Flags {
  std::string config;
  std::optional<unsigned long long> seed;
  std::optional<int> jobs;
  std::string out;
  std::vector<std::string> set;
  bool quiet = false;

  std::optional<int> threshold;
  std::string enhancer;
  std::string enhancer_cmd;
  bool union_raw = false;
  std::optional<double> fscore_tau;
  bool cd_root = false;
  std::string pred;
  std::string gt;
  std::string ap_method;
  std::string scene;
  std::string frames;
  std::string axes;
};

void add_stage_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--threshold", f.threshold, "Foreground intensity threshold (0-255)")->check(CLI::Range(0, 255));
  sub->add_option("--enhancer", f.enhancer, "passthrough | oracle | external");
  sub->add_option("--enhancer-cmd", f.enhancer_cmd, "External enhancer command (gets <in.pgm> <out.pgm>)");
  sub->add_flag("--union-raw", f.union_raw, "Keep validated points alongside lifted ones");
  sub->add_option("--fscore-tau", f.fscore_tau, "F-score matching threshold in meters");
  sub->add_flag("--cd-root", f.cd_root, "Unsquared chamfer distance");
  sub->add_option("--pred", f.pred, "Detections JSON lines");
  sub->add_option("--gt", f.gt, "Ground-truth JSON lines (default <out>/boxes/gt.jsonl)");
  sub->add_option("--ap-method", f.ap_method, "nuscenes | interp101");
  sub->add_option("--scene", f.scene, "Use an existing scene file instead of generating one");
  sub->add_option("--frames", f.frames, "Comma-separated keyframe indices");
}

// Precedence: built-in defaults, then --config, then --set, then dedicated flags.
hd_status build_config(hd_config* cfg, const Flags& f) {
  hd_status s = HD_OK;
  if (!f.config.empty() && (s = hd_config_load(cfg, f.config.c_str())) != HD_OK) return s;
  for (const std::string& kv : f.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "hyperdet: --set expects key=value, got '%s'\n", kv.c_str());
      return HD_ERR_CONFIG;
    }
    if ((s = hd_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str())) != HD_OK) return s;
  }
  std::vector<std::pair<std::string, std::string>> kv;
  if (f.seed) kv.emplace_back("run.seed", std::to_string(*f.seed));
  if (f.jobs) kv.emplace_back("run.jobs", std::to_string(*f.jobs));
  if (!f.out.empty()) kv.emplace_back("run.out", f.out);
  if (f.threshold) kv.emplace_back("thresholds.tau_int", std::to_string(*f.threshold));
  if (!f.enhancer.empty()) kv.emplace_back("enhancer.kind", f.enhancer);
  if (!f.enhancer_cmd.empty()) kv.emplace_back("enhancer.external_cmd", f.enhancer_cmd);
  if (f.union_raw) kv.emplace_back("enhance.union_raw", "true");
  if (f.fscore_tau) kv.emplace_back("thresholds.fscore_tau", std::to_string(*f.fscore_tau));
  if (f.cd_root) kv.emplace_back("eval.cd_root", "true");
  if (!f.pred.empty()) kv.emplace_back("eval.pred", f.pred);
  if (!f.gt.empty()) kv.emplace_back("eval.gt", f.gt);
  if (!f.ap_method.empty()) kv.emplace_back("eval.ap_method", f.ap_method);
  if (!f.scene.empty()) kv.emplace_back("scene.path", f.scene);
  for (const auto& [k, v] : kv) {
    if ((s = hd_config_set(cfg, k.c_str(), v.c_str())) != HD_OK) return s;
  }
  return hd_config_check(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-radar point-cloud refinement pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(hd_version()));

  Flags f;
  app.add_option("--config", f.config, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", f.seed, "Base random seed");
  app.add_option("--jobs", f.jobs, "Worker threads for frame-level parallelism")->check(CLI::PositiveNumber);
  app.add_option("--out", f.out, "Output directory");
  app.add_option("--set", f.set, "Override a config key (key=value), repeatable");
  app.add_flag("-q,--quiet", f.quiet, "Only print errors");

  const std::vector<std::pair<std::string, std::string>> stages = {
      {"synth", "Generate scene, radar sweeps, LiDAR sweeps and boxes"},
      {"fuse", "Align and accumulate sweeps per keyframe"},
      {"validate", "Cross-sensor and self-consistency filtering"},
      {"rasterize", "Rasterize validated clouds to BEV"},
      {"make-target", "Build LiDAR-guided supervision targets"},
      {"enhance", "Run the enhancer on each condition BEV"},
      {"lift", "Recover 4D hyper clouds from enhanced BEVs"},
      {"deraster", "Dump thresholded foreground pixels"},
      {"eval-geom", "Chamfer / Hausdorff / F-score against targets"},
      {"report-fg", "Per-category foreground boost report"},
      {"eval-det", "Center-distance mAP of detections against ground truth"},
  };
  std::map<CLI::App*, std::string> stage_of;
  for (const auto& [name, desc] : stages) {
    CLI::App* sub = app.add_subcommand(name, desc);
    add_stage_flags(sub, f);
    stage_of[sub] = name;
  }
  CLI::App* run = app.add_subcommand("run", "Run every stage in order");
  add_stage_flags(run, f);
  CLI::App* ablate = app.add_subcommand("ablate", "Run the pipeline over an ablation grid");
  add_stage_flags(ablate, f);
  ablate->add_option("--axes", f.axes,
                     "Comma-separated: no-accumulation, no-validation, enhancer=a|b, threshold=t1|t2");
  CLI::App* show = app.add_subcommand("config", "Print the effective configuration");

  CLI11_PARSE(app, argc, argv);

  hd_set_log_callback(print_line, f.quiet ? &f : nullptr);
  hd_config* cfg = nullptr;
  hd_status s = hd_config_create(&cfg);
  if (s != HD_OK) return report(s);
  s = build_config(cfg, f);
  if (s == HD_OK) {
    const char* frames = f.frames.empty() ? nullptr : f.frames.c_str();
    if (show->parsed()) {
      std::size_t needed = 0;
      hd_config_dump(cfg, nullptr, 0, &needed);
      std::string text(needed, '\0');
      s = hd_config_dump(cfg, text.data(), text.size(), nullptr);
      if (s == HD_OK) std::fputs(text.c_str(), stdout);
    } else if (run->parsed()) {
      s = hd_run_all(cfg, frames);
    } else if (ablate->parsed()) {
      s = hd_run_ablation(cfg, f.axes.c_str());
    } else {
      for (const auto& [sub, name] : stage_of) {
        if (sub->parsed()) s = hd_run_stage(cfg, name.c_str(), frames);
      }
    }
  }
  hd_config_destroy(cfg);
  hd_set_log_callback(nullptr, nullptr);
  return report(s);
}
