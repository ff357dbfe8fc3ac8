#pragma once

#include <string>
#include <vector>

#include "cssdf/config_field.hpp"
#include "cssdf/metrics.hpp"
#include "cssdf/rrt_connect.hpp"
#include "cssdf/traj_opt.hpp"
#include "cssdf/self_dataset.hpp"
#include "cssdf/trainer.hpp"

namespace cssdf {

struct LatencyRow {
  std::size_t scale = 0;
  double dist_ms = 0.0;  // median, distance only
  double grad_ms = 0.0;  // median, distance and gradient
};

/// Median wall time of batched eval-mode queries at each scale. Inputs are
/// uniform over the model's normalization box (seeded).
std::vector<LatencyRow> latency_bench(const FieldModel& model, const std::vector<std::size_t>& scales,
                                      int repeats = 5, std::uint64_t seed = 1);
/// 10^0 .. 10^max_exponent.
std::vector<std::size_t> decade_scales(int max_exponent = 5);
void save_latency_csv(const std::vector<LatencyRow>& rows, const std::string& path);

struct AblationVariant {
  std::string name;
  bool balance = true;
  bool mine = true;
  LossWeights weights;
};

/// Dataset variants (uniform, class-balanced, complete) followed by loss
/// variants (distance-only, +magnitude, +direction) on the complete data.
std::vector<AblationVariant> default_ablation_variants();

struct AblationOptions {
  std::size_t samples = 10000;
  int epochs = 100;
  std::uint64_t seed = 1;
  int workers = 1;
  FieldNetConfig net;
  std::size_t test_uniform = 3000;
  std::size_t test_band = 1000;
  int grid_cells = 201;
  double tol = 1e-4;
};

struct AblationRow {
  AblationVariant variant;
  EvalReport report;  // bsr / class ratio describe the training data
  std::size_t train_samples = 0;
  double final_val_loss = 0.0;
  bool failed = false;
  std::string message;
};

/// Held-out self-collision test set labelled by the grid oracle: uniform
/// configurations plus band cells (|d| <= 0.05).
Dataset oracle_test_set(const RobotModel& model, const AblationOptions& options);

/// Trains every variant with the same budget and seed and evaluates each on
/// the same oracle test set. A diverged variant is marked failed.
std::vector<AblationRow> ablation_run(const RobotModel& model, const std::vector<AblationVariant>& variants,
                                      const AblationOptions& options);
void save_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path);

struct PlanningOptions {
  RrtOptions rrt;
  int segments = 12;
  double speed = 1.0;  // rad/s, initial timing
  TrajWeights weights;
  OptimizeOptions optimize;
  double v_max = 1.5;  // rad/s
  double a_max = 5.0;  // rad/s^2
};

struct PlanningResult {
  std::vector<Configuration> path;  // sampling initializer
  double sampling_length = 0.0;
  SplineTrajectory initial;
  OptimizeResult optimized;
  TrajectoryMetrics metrics;  // of the optimized trajectory
  double planning_ms = 0.0;
};

/// Joint box of the model plus the velocity and acceleration limits.
TrajBounds planning_bounds(const RobotModel& model, const PlanningOptions& options);

/// Sampling initializer, spline fit and optimization against `field`;
/// collision rate measured with the exact checker.
PlanningResult plan_trial(const RobotModel& model, const Scene& scene, const ConfigField* field,
                          const Configuration& start, const Configuration& goal, const PlanningOptions& options);

}  // namespace cssdf
