#pragma once

#include <string>

#include "cssdf/common.hpp"

namespace cssdf {

/// minimize 1/2 x'Px + q'x subject to l <= Cx <= u. Infinite bounds are
/// allowed; l = u encodes an equality row.
struct QpInstance {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::MatrixXd C;
  Eigen::VectorXd l, u;

  int variables() const { return static_cast<int>(q.size()); }
  int rows() const { return static_cast<int>(l.size()); }
  /// Throws InvalidInputError on inconsistent sizes, asymmetric P or l > u.
  void validate() const;
  double cost(const Eigen::VectorXd& x) const { return 0.5 * x.dot(P * x) + q.dot(x); }
};

struct QpSettings {
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  int max_iterations = 4000;
  double eps_abs = 1e-7;
  double eps_rel = 0.0;
  double eps_infeasible = 1e-9;
  bool adaptive_rho = true;
  int adapt_every = 25;
  bool polish = true;
  /// Residual bound for the solved status after polishing.
  double success_tol = 1e-6;
};

enum class QpStatus { kSolved, kMaxIterations, kInfeasible };
std::string to_string(QpStatus s);

struct QpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd y;  // row multipliers, positive on active upper bounds
  QpStatus status = QpStatus::kMaxIterations;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool polished = false;
};

/// Infinity norms of Cx - clamp(Cx, l, u) and Px + q + C'y.
void qp_residuals(const QpInstance& qp, const Eigen::VectorXd& x, const Eigen::VectorXd& y, double& primal,
                  double& dual);

/// Operator-splitting solver with over-relaxation, adaptive step size,
/// primal infeasibility detection and an active-set polishing step.
/// Deterministic for a given instance and warm start.
QpResult solve_qp(const QpInstance& qp, const QpSettings& settings = {}, const Eigen::VectorXd* warm_x = nullptr,
                  const Eigen::VectorXd* warm_y = nullptr);

}  // namespace cssdf
