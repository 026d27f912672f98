#pragma once

// Enhancer contract (condition BEV -> enhanced BEV) and the recovery of a
// 4D "hyper" point cloud from an enhanced BEV.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hyperdet/bev.hpp"
#include "hyperdet/core.hpp"

namespace hyperdet::enhance {

enum class EnhancerKind { kPassthrough, kOracle, kExternal };

std::string_view enhancer_name(EnhancerKind k);
EnhancerKind parse_enhancer(std::string_view s);

struct EnhancerSpec {
  EnhancerKind kind = EnhancerKind::kPassthrough;
  /// Command for the external kind. `{in}` and `{out}` are replaced by the
  /// quoted condition/output PGM paths; without placeholders both paths are
  /// appended as two arguments.
  std::string external_cmd;
  /// Scratch directory for external invocations.
  std::filesystem::path work_dir;

  void check() const;
};

/// passthrough: returns the condition. oracle: returns `oracle_target`
/// (required). external: runs the command and validates the returned grid.
/// External failures throw kExternalEnhancer with the captured output.
bev::BEVGrid enhance(const bev::BEVGrid& condition, const EnhancerSpec& spec,
                     const bev::BEVGrid* oracle_target = nullptr);

struct HyperPoint {
  RadarPoint point;
  double confidence = 1.0;
  std::size_t source_index = 0;  // index into the validated cloud
};

struct HyperCloud {
  std::vector<HyperPoint> points;
  std::string frame_id;

  std::size_t size() const { return points.size(); }
  PointCloud to_point_cloud() const;
};

/// Each (x, y) inherits z, rcs, doppler and t from its nearest validated
/// point in the xy plane (ties: lowest index). Lifted points carry sensor
/// id -2. Throws kInvalidArgument when `validated` is empty.
HyperCloud lift_attributes(std::span<const bev::ForegroundPixel> fg,
                           const PointCloud& validated);

/// derasterize + lift. With `union_raw` the validated points are emitted
/// first (confidence 1, their own index as source) followed by the lifted
/// points.
HyperCloud assemble_hyper_cloud(const bev::BEVGrid& enhanced, const PointCloud& validated,
                                std::uint8_t tau_int, bool union_raw = false);

inline constexpr std::string_view kHyperHeader =
    "x,y,z,rcs,doppler,sensor_id,t,confidence,source_index";

std::string hyper_to_csv(const HyperCloud& cloud);
void write_hyper_csv(const HyperCloud& cloud, const std::filesystem::path& path);
HyperCloud read_hyper_csv(const std::filesystem::path& path);

}  // namespace hyperdet::enhance
