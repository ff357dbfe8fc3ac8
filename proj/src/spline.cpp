#include "cssdf/spline.hpp"

#include "cssdf/errors.hpp"

namespace cssdf {

namespace {

Eigen::MatrixXd tridiagonal(const Eigen::VectorXd& T) {
  const int n = static_cast<int>(T.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (int i = 0; i < n; ++i) {
    A(i, i) += T[i] / 3.0;
    A(i + 1, i + 1) += T[i] / 3.0;
    A(i, i + 1) += T[i] / 6.0;
    A(i + 1, i) += T[i] / 6.0;
  }
  return A;
}

}  // namespace

Eigen::MatrixXd solve_accelerations(const Eigen::MatrixXd& q, const Eigen::VectorXd& T,
                                    const Eigen::VectorXd& v_start, const Eigen::VectorXd& v_end) {
  const int n = static_cast<int>(T.size());
  if (n < 1 || q.cols() != n + 1) throw InvalidInputError("spline: need N durations for N+1 control points");
  if ((T.array() <= 0.0).any()) throw InvalidInputError("spline: durations must be positive");
  Eigen::MatrixXd B(n + 1, q.rows());
  for (int r = 0; r <= n; ++r) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(q.rows());
    if (r < n) rhs += (q.col(r + 1) - q.col(r)) / T[r];
    if (r > 0) rhs -= (q.col(r) - q.col(r - 1)) / T[r - 1];
    if (r == 0) rhs -= v_start;
    if (r == n) rhs += v_end;
    B.row(r) = rhs.transpose();
  }
  return tridiagonal(T).ldlt().solve(B).transpose();
}

SplineTrajectory make_spline(const Eigen::MatrixXd& q, const Eigen::VectorXd& T, const Eigen::VectorXd& v_start,
                             const Eigen::VectorXd& v_end) {
  SplineTrajectory s;
  s.q = q;
  s.T = T;
  s.v_start = v_start;
  s.v_end = v_end;
  s.m = solve_accelerations(q, T, v_start, v_end);
  return s;
}

void accumulate_acceleration_adjoint(const SplineTrajectory& traj, const Eigen::MatrixXd& dm, Eigen::MatrixXd& dq,
                                     Eigen::VectorXd& dT) {
  const int n = traj.segments();
  // Lambda solves A lambda = dJ/dm (A symmetric); the total derivative is
  // dJ/dtheta - lambda^T dR/dtheta with R = A m - B.
  const Eigen::MatrixXd lambda = tridiagonal(traj.T).ldlt().solve(dm.transpose()).transpose();
  const auto& q = traj.q;
  const auto& m = traj.m;
  const auto& T = traj.T;
  for (int r = 0; r <= n; ++r) {
    const Eigen::VectorXd l = lambda.col(r);
    if (r < n) {
      // Terms of segment r on its left end: (T_r/3) m_r + (T_r/6) m_{r+1} - (q_{r+1} - q_r)/T_r.
      const Eigen::VectorXd dq_seg = q.col(r + 1) - q.col(r);
      dq.col(r + 1) += l / T[r];
      dq.col(r) -= l / T[r];
      dT[r] -= l.dot(m.col(r) / 3.0 + m.col(r + 1) / 6.0 + dq_seg / (T[r] * T[r]));
    }
    if (r > 0) {
      // Terms of segment r-1 on its right end: (T/6) m_{r-1} + (T/3) m_r + (q_r - q_{r-1})/T.
      const Eigen::VectorXd dq_seg = q.col(r) - q.col(r - 1);
      dq.col(r) -= l / T[r - 1];
      dq.col(r - 1) += l / T[r - 1];
      dT[r - 1] -= l.dot(m.col(r - 1) / 6.0 + m.col(r) / 3.0 - dq_seg / (T[r - 1] * T[r - 1]));
    }
  }
}

Eigen::VectorXd SplineTrajectory::start_velocity(int i) const {
  return (q.col(i + 1) - q.col(i)) / T[i] - T[i] / 3.0 * m.col(i) - T[i] / 6.0 * m.col(i + 1);
}

Eigen::VectorXd SplineTrajectory::end_velocity(int i) const {
  return (q.col(i + 1) - q.col(i)) / T[i] + T[i] / 6.0 * m.col(i) + T[i] / 3.0 * m.col(i + 1);
}

SplineState SplineTrajectory::eval(double t) const {
  const double total = total_time();
  if (!(t >= 0.0) || t > total * (1.0 + 1e-12)) throw RangeError("spline: time outside [0, total]");
  int i = 0;
  double start = 0.0;
  while (i < segments() - 1 && t > start + T[i]) {
    start += T[i];
    ++i;
  }
  const double h = T[i];
  const double tau = std::min(t - start, h);
  const double u = h - tau;
  const Eigen::VectorXd a = q.col(i) / h - m.col(i) * h / 6.0;
  const Eigen::VectorXd b = q.col(i + 1) / h - m.col(i + 1) * h / 6.0;
  SplineState s;
  s.q = m.col(i) * (u * u * u) / (6.0 * h) + m.col(i + 1) * (tau * tau * tau) / (6.0 * h) + a * u + b * tau;
  s.qd = -m.col(i) * (u * u) / (2.0 * h) + m.col(i + 1) * (tau * tau) / (2.0 * h) - a + b;
  s.qdd = m.col(i) * (u / h) + m.col(i + 1) * (tau / h);
  return s;
}

SegmentSample sample_segment(const SplineTrajectory& traj, int i, double s) {
  const double h = traj.T[i];
  const double r = 1.0 - s;
  const double ca = r * r * r - r;
  const double cb = s * s * s - s;
  SegmentSample out;
  out.d_qi = r;
  out.d_qj = s;
  out.d_mi = h * h / 6.0 * ca;
  out.d_mj = h * h / 6.0 * cb;
  out.q = r * traj.q.col(i) + s * traj.q.col(i + 1) + out.d_mi * traj.m.col(i) + out.d_mj * traj.m.col(i + 1);
  out.d_T = h / 3.0 * (ca * traj.m.col(i) + cb * traj.m.col(i + 1));
  return out;
}

}  // namespace cssdf
