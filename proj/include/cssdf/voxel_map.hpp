#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "cssdf/robot_model.hpp"

namespace cssdf {

using VoxelIndex = std::array<int, 3>;

/// Voxel -> configuration-id mapping over a workspace box. Planar maps use a
/// single layer along z.
class VoxelConfigMap {
 public:
  VoxelConfigMap() = default;
  VoxelConfigMap(int dim, const Aabb& box, double dx);

  int dim() const { return dim_; }
  double resolution() const { return dx_; }
  const Point& origin() const { return origin_; }
  const VoxelIndex& counts() const { return counts_; }
  std::size_t voxel_count() const {
    return static_cast<std::size_t>(counts_[0]) * counts_[1] * counts_[2];
  }

  /// h(p) = floor((p - w_min) / dx), without bounds checks.
  VoxelIndex hash(const Point& p) const;
  bool in_bounds(const VoxelIndex& g) const;
  std::int64_t flat(const VoxelIndex& g) const {
    return (static_cast<std::int64_t>(g[0]) * counts_[1] + g[1]) * counts_[2] + g[2];
  }
  VoxelIndex unflat(std::int64_t f) const;
  /// Closed box covered by voxel g.
  Aabb voxel_box(const VoxelIndex& g) const;

  /// M(h(p)): ids of configurations with a sphere touching p's voxel
  /// (sorted). Throws OutOfBoundsError when p lies outside the box.
  const std::vector<std::int64_t>& risk_configs(const Point& p) const;
  const std::vector<std::int64_t>& configs_in(std::int64_t flat_voxel) const;

  const std::vector<Configuration>& configurations() const { return configs_; }
  const std::unordered_map<std::int64_t, std::vector<std::int64_t>>& cells() const { return cells_; }
  std::size_t entry_count() const;

 private:
  friend VoxelConfigMap build_voxel_map(const RobotModel&, const std::vector<Configuration>&, const Aabb&,
                                        double, int);

  int dim_ = 3;
  Point origin_ = Point::Zero();
  double dx_ = 0.0;
  VoxelIndex counts_{1, 1, 1};
  std::vector<Configuration> configs_;
  std::unordered_map<std::int64_t, std::vector<std::int64_t>> cells_;
};

/// Closed sphere / closed box intersection over the first `dim` axes.
bool sphere_touches_box(const Point& center, double radius, const Aabb& box, int dim);

/// Parallel spatial hashing: every sphere scans the voxels of its AABB and
/// registers its configuration in those it truly intersects. Per-worker
/// partial lists are merged by sorting, so the result does not depend on
/// scheduling. Throws OutOfBoundsError if any sphere leaves the box.
VoxelConfigMap build_voxel_map(const RobotModel& model, const std::vector<Configuration>& configs,
                               const Aabb& box, double dx, int workers = 1);

}  // namespace cssdf
