#pragma once

#include <functional>
#include <string>
#include <utility>

#include "cssdf/config_field.hpp"
#include "cssdf/spline.hpp"

namespace cssdf {

struct SafetyPenaltyParams {
  double d0 = 0.1;    // rad
  double alpha = 5.0; // 1/rad
  /// Adds exp(-alpha d0) to the negative branch so both branches meet at 0.
  bool shim = true;
};

/// Piecewise exponential penalty of a signed distance and its derivative.
std::pair<double, double> safety_penalty(double phi, const SafetyPenaltyParams& params);

struct TrajWeights {
  double smooth = 1.0;
  double time = 1.0;
  double regularity = 0.1;
  double length = 1.0;
  double safety = 10.0;
  SafetyPenaltyParams penalty;
  /// Extra safety samples strictly inside each segment.
  int interior_samples = 5;
};

/// Box limits on control points, knot velocities and accelerations. Empty
/// vectors disable a row.
struct TrajBounds {
  Eigen::VectorXd q_min, q_max;
  Eigen::VectorXd v_max;  // symmetric
  Eigen::VectorXd a_max;  // symmetric
  double weight = 1e3;    // quadratic penalty weight
};

struct ObjectiveTerms {
  double smooth = 0.0;
  double time = 0.0;
  double regularity = 0.0;
  double length = 0.0;
  double safety = 0.0;
  double bounds = 0.0;
  double total = 0.0;
};

/// Partial derivatives with the accelerations treated as free variables.
struct ObjectiveGradient {
  Eigen::MatrixXd dq;
  Eigen::MatrixXd dm;
  Eigen::VectorXd dT;
};

/// Weighted objective of a trajectory; `field` may be null when the safety
/// weight is zero. Throws OptimizationError on a non-finite field value.
ObjectiveTerms objective(const SplineTrajectory& traj, const ConfigField* field, const TrajWeights& weights,
                         const TrajBounds* bounds = nullptr, ObjectiveGradient* grad = nullptr);

/// Reduced problem over interior control points and log-durations with the
/// accelerations eliminated (endpoints and boundary velocities fixed).
class TrajectoryProblem {
 public:
  TrajectoryProblem(SplineTrajectory initial, const ConfigField* field, TrajWeights weights, TrajBounds bounds);

  Eigen::VectorXd pack(const SplineTrajectory& traj) const;
  SplineTrajectory unpack(const Eigen::VectorXd& x) const;
  double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const;
  const SplineTrajectory& initial() const { return initial_; }

 private:
  SplineTrajectory initial_;
  const ConfigField* field_;
  TrajWeights weights_;
  TrajBounds bounds_;
};

struct OptimizeOptions {
  int max_iterations = 500;
  double grad_tol = 1e-4;
  int memory = 10;
};

struct OptimizeResult {
  SplineTrajectory traj;
  ObjectiveTerms terms;
  int iterations = 0;
  bool converged = false;
  double grad_norm = 0.0;
  /// Largest remaining box violation after the final projection.
  double max_violation = 0.0;
  bool feasible = true;
};

/// Limited-memory quasi-Newton descent with backtracking, followed by a
/// projection of control points into the joint box and a uniform time
/// scaling that restores velocity and acceleration limits.
OptimizeResult optimize(const SplineTrajectory& initial, const ConfigField* field, const TrajWeights& weights,
                        const TrajBounds& bounds, const OptimizeOptions& options = {});

/// Largest violation of the box rows.
double bound_violation(const SplineTrajectory& traj, const TrajBounds& bounds);

/// Polyline resampled at equal arc length into `segments` pieces, with
/// durations from a nominal speed and zero boundary velocities.
SplineTrajectory spline_from_path(const std::vector<Configuration>& path, int segments, double speed = 1.0);

struct TrajectoryMetrics {
  double collision_rate = 0.0;  // % of dense states in collision
  double length = 0.0;          // rad
  std::size_t samples = 0;
};

/// Dense uniform-in-time resampling (`samples` states) checked with the
/// binary collision test.
TrajectoryMetrics measure_trajectory(const SplineTrajectory& traj,
                                     const std::function<bool(const Configuration&)>& colliding,
                                     std::size_t samples = 1000);

/// Length of a polyline through the waypoints.
double path_length(const std::vector<Configuration>& path);

/// t, q_1..q_n, qd_1..qd_n, qdd_1..qdd_n at `samples` uniform times.
void save_trajectory_csv(const SplineTrajectory& traj, const std::string& path, std::size_t samples = 200);

}  // namespace cssdf
