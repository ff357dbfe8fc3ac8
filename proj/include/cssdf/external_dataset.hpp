#pragma once

#include <memory>
#include <random>
#include <vector>

#include "cssdf/dataset.hpp"
#include "cssdf/self_dataset.hpp"
#include "cssdf/voxel_map.hpp"

namespace cssdf {

struct ExternalOptions {
  std::size_t map_configs = 20000;  // uniform configurations hashed into the voxel map
  double dx = 0.0;                  // voxel size in m; 0 selects the smallest sphere radius
  double pool_radius = 1.0;         // rad, complement samples kept near the risk set
  std::size_t risk_cap = 512;       // per-point subsample caps
  std::size_t complement_cap = 512;
  std::size_t samples_per_point = 8;
  double boundary_fraction = 0.5;   // share of per-point samples taken from mined boundary points
  double tol = 1e-4;
  IndexBackend backend = IndexBackend::kExact;
  double extension = 1.5;
  std::uint64_t seed = 1;
  int workers = 1;
};

/// Per-point neighbour pools and mined boundary for the checker
/// "collides with p".
class PointBoundary {
 public:
  PointBoundary(const RobotModel& model, const VoxelConfigMap& map, const Point& p,
                const ExternalOptions& options, std::mt19937_64& rng);

  const Point& point() const { return p_; }
  /// No configuration in the pools collides with p.
  bool unreachable() const { return col_->size() == 0; }
  std::size_t risk_count() const { return risk_count_; }
  std::size_t colliding_count() const { return colliding_count_; }
  const std::vector<BoundaryPoint>& mined() const { return mined_; }

  /// Mines the boundary from q toward its nearest opposite-class pool entry
  /// and records the result.
  void mine_from(const Configuration& q, bool colliding);
  /// Signed distance to the nearest mined boundary point with the field
  /// gradient.
  GroundTruth query(const Configuration& q, bool colliding) const;

 private:
  const RobotModel* model_;
  Point p_;
  double tol_;
  std::unique_ptr<NeighborIndex> free_;
  std::unique_ptr<NeighborIndex> col_;
  BoundaryDistance boundary_;
  std::vector<BoundaryPoint> mined_;
  std::size_t risk_count_ = 0;
  std::size_t colliding_count_ = 0;
};

/// Value of d_c for a point that no configuration reaches: the diameter of
/// the extended joint box.
double unreachable_distance(const RobotModel& model);

/// d_c-only sample for (q, p). Unreachable points give the clamped positive
/// value with gradient e_1.
FieldSample external_ground_truth(const RobotModel& model, PointBoundary& boundary, const Configuration& q);

struct ExternalReport {
  std::size_t points = 0;
  std::size_t unreachable = 0;
  std::size_t samples = 0;
  std::size_t map_entries = 0;
  double bsr = 0.0;
  double class_ratio = 0.0;
};

/// External pipeline over explicit obstacle points: voxel map over uniform
/// configurations, per-point risk sets and boundary mining. When `self` is
/// given each sample's value is the composite of the self and point
/// distances.
Dataset build_external_dataset(const RobotModel& model, const std::vector<Point>& points,
                               const ExternalOptions& options, const SelfDistanceModel* self = nullptr,
                               ExternalReport* report = nullptr);

/// Composite sample from self and point ground truths.
FieldSample compose_samples(const FieldSample& self_part, const FieldSample& point_part);

}  // namespace cssdf
