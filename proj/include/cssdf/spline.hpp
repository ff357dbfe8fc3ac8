#pragma once

#include "cssdf/common.hpp"

namespace cssdf {

struct SplineState {
  Eigen::VectorXd q, qd, qdd;
};

/// Piecewise cubic in moment form: segment i joins control points q_i and
/// q_{i+1} over duration T_i with accelerations m_i and m_{i+1} at its ends.
/// Columns of `q` and `m` are control points.
struct SplineTrajectory {
  Eigen::MatrixXd q;
  Eigen::MatrixXd m;
  Eigen::VectorXd T;
  Eigen::VectorXd v_start;
  Eigen::VectorXd v_end;

  int dof() const { return static_cast<int>(q.rows()); }
  int segments() const { return static_cast<int>(T.size()); }
  double total_time() const { return T.sum(); }

  SplineState eval(double t) const;
  /// Velocity at the start of segment i.
  Eigen::VectorXd start_velocity(int i) const;
  /// Velocity at the end of segment i.
  Eigen::VectorXd end_velocity(int i) const;
};

/// Accelerations making the spline C2 with the given boundary velocities.
/// Solves the symmetric tridiagonal system A(T) m = B(q, T).
Eigen::MatrixXd solve_accelerations(const Eigen::MatrixXd& q, const Eigen::VectorXd& T,
                                    const Eigen::VectorXd& v_start, const Eigen::VectorXd& v_end);

SplineTrajectory make_spline(const Eigen::MatrixXd& q, const Eigen::VectorXd& T, const Eigen::VectorXd& v_start,
                             const Eigen::VectorXd& v_end);

/// Pulls an objective gradient on m back to q and T through the C2
/// conditions (adjoint of solve_accelerations). Adds into dq and dT.
void accumulate_acceleration_adjoint(const SplineTrajectory& traj, const Eigen::MatrixXd& dm, Eigen::MatrixXd& dq,
                                     Eigen::VectorXd& dT);

/// Position at fraction s in [0, 1] of segment i, with partial derivatives
/// of each coordinate with respect to q_i, q_{i+1}, m_i, m_{i+1} (scalars
/// applying per coordinate) and T_i (vector).
struct SegmentSample {
  Eigen::VectorXd q;
  double d_qi, d_qj, d_mi, d_mj;
  Eigen::VectorXd d_T;
};
SegmentSample sample_segment(const SplineTrajectory& traj, int i, double s);

}  // namespace cssdf
