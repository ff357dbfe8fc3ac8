#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cssdf/config_field.hpp"
#include "cssdf/qp_solver.hpp"
#include "cssdf/robot_model.hpp"
#include "cssdf/scene.hpp"

namespace cssdf {

/// Single-integrator joint dynamics q_{k+1} = q_k + dt u_k.
struct MpcProblem {
  int horizon = 10;
  double dt = 0.01;   // s
  Eigen::VectorXd Q;  // diagonal state weights
  Eigen::VectorXd R;  // diagonal input weights
  Eigen::VectorXd q_min, q_max;
  Eigen::VectorXd u_min, u_max;  // rad/s
  double gamma = 0.05;           // rad
  /// Reference configurations; the last one is repeated past the end.
  std::vector<Configuration> reference;
  /// Constraint rows per predicted step (nearest point-cloud points).
  int rows_per_step = 5;
  /// Use phi(q_{k+1}) >= (1 - lambda dt) phi(q_k) instead of the default
  /// safety row.
  bool barrier_form = false;
  double barrier_rate = 1.0;  // 1/s

  void validate(int dof) const;
  const Configuration& reference_at(int k) const;
};

/// Default weights and symmetric bounds around a model's joint limits.
MpcProblem default_mpc_problem(const RobotModel& model, int horizon, double u_max = 1.0);

/// Row a' dq >= b over the step dq = q_{k+1} - q_k. Returns false when the
/// gradient vanishes while phi < gamma.
struct SafetyRow {
  Eigen::VectorXd a;
  double b = 0.0;
};
bool linearized_safety_row(const FieldValue& phi, double gamma, double dt, SafetyRow& row);

struct MpcQp {
  QpInstance qp;
  /// Cost offset: full cost = qp.cost(u) + constant.
  double constant = 0.0;
  int safety_rows = 0;
  /// Steps whose input was pinned to zero because of a vanished gradient.
  std::vector<int> emergency_steps;
  double min_phi = 0.0;
};

/// Stacks u_0..u_{H-1}; states are eliminated. `nominal` holds the
/// linearization states q_0..q_{H-1} (q_0 = current).
MpcQp build_qp(const MpcProblem& problem, const ConfigField* field, const Configuration& q_current,
               const std::vector<Configuration>& nominal);

struct MpcStep {
  Eigen::VectorXd u;
  QpStatus status = QpStatus::kSolved;
  bool fallback = false;
  bool emergency = false;
  double solve_ms = 0.0;
  double min_phi = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

class MpcController {
 public:
  MpcController(const ConfigField* field, MpcProblem problem, QpSettings settings = {});

  const MpcProblem& problem() const { return problem_; }
  MpcProblem& problem() { return problem_; }
  /// Solves from q, applies the first input (clipped to the input box) and
  /// shifts the plan for the next linearization.
  MpcStep step(const Configuration& q);
  void reset();

 private:
  const ConfigField* field_;
  MpcProblem problem_;
  QpSettings settings_;
  Eigen::VectorXd plan_;  // previous input sequence
  Eigen::VectorXd last_u_;
  Eigen::VectorXd warm_y_;
  int failures_ = 0;
};

struct EpisodeRow {
  double t = 0.0;
  Configuration q;
  Eigen::VectorXd u;
  double min_phi = 0.0;
  double solve_ms = 0.0;
  std::string status;
  bool colliding = false;
};

struct EpisodeMetrics {
  double collision_rate = 0.0;  // % of steps
  double max_control = 0.0;     // rad/s
  double control_frequency = 0.0;  // Hz
  bool goal_reached = false;
  double final_error = 0.0;
  std::size_t steps = 0;
  std::size_t solved = 0;
  std::size_t fallbacks = 0;
  double max_residual = 0.0;  // over solved QPs
};

struct Episode {
  std::vector<EpisodeRow> rows;
  EpisodeMetrics metrics;
  void save_csv(const std::string& path) const;
};

/// Closed loop over `duration` seconds. `observe` refreshes the controller's
/// field with the scene at the current time before each step.
Episode simulate(const RobotModel& model, const Scene& scene, MpcController& controller,
                 const std::function<void(const Scene&)>& observe, const Configuration& q0,
                 const Configuration& goal, double duration, double goal_tol = 1e-2);

}  // namespace cssdf
