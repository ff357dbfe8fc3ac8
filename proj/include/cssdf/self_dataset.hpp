#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "cssdf/dataset.hpp"
#include "cssdf/neighbor_index.hpp"
#include "cssdf/robot_model.hpp"

namespace cssdf {

/// Binary collision test over configurations (true = colliding).
using CollisionChecker = std::function<bool(const Configuration&)>;

struct LabeledConfig {
  Configuration q;
  bool colliding = false;
};

/// N configurations uniform over the extended joint box, labelled by the
/// self-collision checker. Deterministic in seed.
std::vector<LabeledConfig> sample_base_configs(const RobotModel& model, std::size_t count,
                                               std::uint64_t seed);

struct BalanceOptions {
  double tau = 1.25;
  double sigma = 0.05;    // rad
  int resample_cap = 10;  // attempts per needed sample
};

/// Adds Gaussian perturbations of minority samples (kept only when they land
/// in the minority class and inside [lower, upper]) until the
/// majority/minority ratio is <= tau. Returns the input unchanged when
/// already balanced.
std::vector<LabeledConfig> balance_classes(const std::vector<LabeledConfig>& samples,
                                           const CollisionChecker& checker, const Configuration& lower,
                                           const Configuration& upper, const BalanceOptions& options,
                                           std::uint64_t seed);

struct BoundaryPoint {
  Configuration q;            // midpoint of the final bracket
  bool colliding = false;     // checker label at q
  Configuration safe_end;     // bracket end on the safe side
  Configuration collision_end;
  int iterations = 0;
};

/// Bisection between q and its nearest neighbour in the opposing index. The
/// result is inserted into the index matching its label.
BoundaryPoint mine_boundary(NeighborIndex& free_index, NeighborIndex& col_index, const Configuration& q,
                            bool q_colliding, const CollisionChecker& checker, double tol);

/// Bisection on an explicit bracket whose ends have different labels.
BoundaryPoint bisect(const Configuration& a, bool a_colliding, const Configuration& b,
                     const CollisionChecker& checker, double tol);

struct GroundTruth {
  double value = 0.0;
  Eigen::VectorXd grad;
};

/// value = +/-|q - q_b| (negative when colliding), grad = (q - q_b)/|q - q_b|.
GroundTruth ground_truth(const Configuration& q, const Configuration& q_boundary, bool colliding);

/// Gradient of the signed value: the geometric direction flipped for
/// colliding samples.
inline Eigen::VectorXd field_gradient(const GroundTruth& gt, bool colliding) {
  return colliding ? Eigen::VectorXd(-gt.grad) : gt.grad;
}

/// Points uniform in `box`; the first round(count * outside_fraction) are
/// redrawn until they lie farther than total_reach from the base.
std::vector<Point> make_self_collision_points(const RobotModel& model, const Aabb& box, std::size_t count,
                                              std::uint64_t seed, double outside_fraction = 0.5);

/// Nearest-boundary distance estimator for one binary classification. With
/// mined boundary points the value is the distance to the nearest of them;
/// without, the nearest opposite-class sample stands in for the boundary.
class BoundaryDistance {
 public:
  BoundaryDistance(int dim, IndexBackend backend);

  void add_boundary(const BoundaryPoint& b);
  void add_sample(const LabeledConfig& s);
  std::size_t boundary_count() const { return boundary_->size(); }

  /// Signed distance and field gradient. Throws ZeroDistanceError if q sits
  /// exactly on its nearest boundary point.
  GroundTruth query(const Configuration& q, bool colliding) const;

 private:
  std::unique_ptr<NeighborIndex> boundary_;
  std::unique_ptr<NeighborIndex> free_;
  std::unique_ptr<NeighborIndex> col_;
};

struct SelfDatasetOptions {
  std::size_t base_samples = 5000;
  std::uint64_t seed = 1;
  bool balance = true;
  bool mine = true;
  BalanceOptions balancing;
  double tol = 1e-4;
  IndexBackend backend = IndexBackend::kExact;
  double extension = 1.5;
  /// Final sample count after a seeded shuffle; 0 keeps everything.
  std::size_t target_size = 0;
};

struct DatasetReport {
  std::size_t base = 0;
  std::size_t perturbed = 0;
  std::size_t boundary = 0;
  std::size_t total = 0;
  std::size_t unreachable_points = 0;
  double bsr = 0.0;          // %
  double class_ratio = 0.0;  // %
};

/// Self-collision distance estimator over a configuration set: mined
/// boundary plus joint-limit distance for limited joints.
class SelfDistanceModel {
 public:
  SelfDistanceModel(const RobotModel& model, const std::vector<LabeledConfig>& configs, bool mine, double tol,
                    IndexBackend backend, std::vector<BoundaryPoint>* mined = nullptr);

  GroundTruth query(const Configuration& q, bool colliding) const;
  bool has_boundary() const { return has_boundary_; }

 private:
  const RobotModel* model_;
  BoundaryDistance distance_;
  bool has_boundary_ = false;
  bool limited_ = false;
};

/// Self-collision pipeline: uniform sampling, optional class balancing,
/// optional boundary mining, ground truth, virtual points outside reach.
Dataset build_self_dataset(const RobotModel& model, const SelfDatasetOptions& options,
                           DatasetReport* report = nullptr);

}  // namespace cssdf
