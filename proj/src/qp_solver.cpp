#include "cssdf/qp_solver.hpp"

#include <cmath>
#include <limits>

#include "cssdf/errors.hpp"

namespace cssdf {

std::string to_string(QpStatus s) {
  switch (s) {
    case QpStatus::kSolved: return "solved";
    case QpStatus::kMaxIterations: return "max-iter";
    case QpStatus::kInfeasible: return "infeasible";
  }
  return "unknown";
}

void QpInstance::validate() const {
  const auto n = q.size();
  if (P.rows() != n || P.cols() != n) throw InvalidInputError("qp: P has wrong size");
  if (C.cols() != n || C.rows() != l.size() || u.size() != l.size())
    throw InvalidInputError("qp: constraint sizes disagree");
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + P.cwiseAbs().maxCoeff()))
    throw InvalidInputError("qp: P is not symmetric");
  for (Eigen::Index i = 0; i < l.size(); ++i)
    if (!(l[i] <= u[i])) throw InvalidInputError("qp: lower bound above upper bound");
}

void qp_residuals(const QpInstance& qp, const Eigen::VectorXd& x, const Eigen::VectorXd& y, double& primal,
                  double& dual) {
  const Eigen::VectorXd cx = qp.C * x;
  const Eigen::VectorXd viol = cx - cx.cwiseMax(qp.l).cwiseMin(qp.u);
  primal = viol.size() ? viol.lpNorm<Eigen::Infinity>() : 0.0;
  const Eigen::VectorXd r = qp.P * x + qp.q + qp.C.transpose() * y;
  dual = r.size() ? r.lpNorm<Eigen::Infinity>() : 0.0;
}

namespace {

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

// Certificate check: C'dy ~ 0 and u'max(dy,0) + l'min(dy,0) < 0.
bool primal_infeasible(const QpInstance& qp, const Eigen::VectorXd& dy, double eps) {
  const double scale = inf_norm(dy);
  if (!(scale > eps)) return false;
  if (inf_norm(qp.C.transpose() * dy) > eps * scale) return false;
  double support = 0.0;
  for (Eigen::Index i = 0; i < dy.size(); ++i) {
    if (dy[i] > eps * scale) {
      if (!std::isfinite(qp.u[i])) return false;
      support += qp.u[i] * dy[i];
    } else if (dy[i] < -eps * scale) {
      if (!std::isfinite(qp.l[i])) return false;
      support += qp.l[i] * dy[i];
    }
  }
  return support < -eps * scale;
}

// Solves the equality-constrained problem on the guessed active set.
bool polish(const QpInstance& qp, const Eigen::VectorXd& z, const Eigen::VectorXd& y, Eigen::VectorXd& x_out,
            Eigen::VectorXd& y_out) {
  const int n = qp.variables();
  std::vector<int> active;
  std::vector<double> target;
  for (int i = 0; i < qp.rows(); ++i) {
    const bool lower = std::isfinite(qp.l[i]) && z[i] - qp.l[i] < -y[i];
    const bool upper = std::isfinite(qp.u[i]) && qp.u[i] - z[i] < y[i];
    if (lower || upper) {
      active.push_back(i);
      target.push_back(lower ? qp.l[i] : qp.u[i]);
    }
  }
  const int m = static_cast<int>(active.size());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + m, n + m);
  Eigen::VectorXd rhs(n + m);
  K.topLeftCorner(n, n) = qp.P;
  rhs.head(n) = -qp.q;
  for (int k = 0; k < m; ++k) {
    K.block(n + k, 0, 1, n) = qp.C.row(active[k]);
    K.block(0, n + k, n, 1) = qp.C.row(active[k]).transpose();
    rhs[n + k] = target[k];
  }
  const Eigen::VectorXd sol = K.completeOrthogonalDecomposition().solve(rhs);
  if (!sol.allFinite()) return false;
  x_out = sol.head(n);
  y_out = Eigen::VectorXd::Zero(qp.rows());
  for (int k = 0; k < m; ++k) y_out[active[k]] = sol[n + k];
  // Multiplier signs must match the side of each active bound.
  for (int k = 0; k < m; ++k) {
    const int i = active[k];
    const bool is_lower = target[k] == qp.l[i] && !(qp.l[i] == qp.u[i]);
    const bool is_upper = target[k] == qp.u[i] && !(qp.l[i] == qp.u[i]);
    if (is_lower && y_out[i] > 1e-9) return false;
    if (is_upper && y_out[i] < -1e-9) return false;
  }
  return true;
}

}  // namespace

QpResult solve_qp(const QpInstance& qp, const QpSettings& s, const Eigen::VectorXd* warm_x,
                  const Eigen::VectorXd* warm_y) {
  qp.validate();
  const int n = qp.variables();
  const int m = qp.rows();
  QpResult res;
  Eigen::VectorXd x = warm_x && warm_x->size() == n ? *warm_x : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = warm_y && warm_y->size() == m ? *warm_y : Eigen::VectorXd::Zero(m);
  Eigen::VectorXd z = (qp.C * x).cwiseMax(qp.l).cwiseMin(qp.u);

  double rho = s.rho;
  const Eigen::MatrixXd CtC = qp.C.transpose() * qp.C;
  auto factor = [&](double r) {
    Eigen::MatrixXd A = qp.P + CtC * r;
    A.diagonal().array() += s.sigma;
    return Eigen::LLT<Eigen::MatrixXd>(A);
  };
  Eigen::LLT<Eigen::MatrixXd> llt = factor(rho);

  bool converged = false;
  int it = 0;
  for (; it < s.max_iterations; ++it) {
    const Eigen::VectorXd rhs = s.sigma * x - qp.q + qp.C.transpose() * (rho * z - y);
    const Eigen::VectorXd xt = llt.solve(rhs);
    const Eigen::VectorXd zt = qp.C * xt;
    x = s.alpha * xt + (1.0 - s.alpha) * x;
    const Eigen::VectorXd zr = s.alpha * zt + (1.0 - s.alpha) * z;
    const Eigen::VectorXd z_new = (zr + y / rho).cwiseMax(qp.l).cwiseMin(qp.u);
    const Eigen::VectorXd dy = rho * (zr - z_new);
    y += dy;
    z = z_new;

    const Eigen::VectorXd cx = qp.C * x;
    const Eigen::VectorXd px = qp.P * x;
    const Eigen::VectorXd cty = qp.C.transpose() * y;
    const double rp = inf_norm(cx - z);
    const double rd = inf_norm(px + qp.q + cty);
    const double ep = s.eps_abs + s.eps_rel * std::max(inf_norm(cx), inf_norm(z));
    const double ed = s.eps_abs + s.eps_rel * std::max({inf_norm(px), inf_norm(cty), inf_norm(qp.q)});
    if (rp <= ep && rd <= ed) {
      converged = true;
      ++it;
      break;
    }
    if (m > 0 && primal_infeasible(qp, dy, s.eps_infeasible)) {
      res.x = x;
      res.y = dy;
      res.status = QpStatus::kInfeasible;
      res.iterations = it + 1;
      qp_residuals(qp, x, y, res.primal_residual, res.dual_residual);
      return res;
    }
    if (s.adaptive_rho && (it + 1) % s.adapt_every == 0) {
      const double np = std::max({inf_norm(cx), inf_norm(z), 1e-12});
      const double nd = std::max({inf_norm(px), inf_norm(cty), inf_norm(qp.q), 1e-12});
      const double ratio = std::sqrt((rp / np) / std::max(rd / nd, 1e-30));
      const double next = std::clamp(rho * ratio, 1e-6, 1e6);
      if (next > 5.0 * rho || next < 0.2 * rho) {
        rho = next;
        llt = factor(rho);
      }
    }
  }
  res.iterations = it;
  res.x = x;
  res.y = y;
  qp_residuals(qp, x, y, res.primal_residual, res.dual_residual);

  if (s.polish) {
    Eigen::VectorXd px, py;
    if (polish(qp, z, y, px, py)) {
      double pp = 0.0, pd = 0.0;
      qp_residuals(qp, px, py, pp, pd);
      if (std::max(pp, pd) <= std::max(res.primal_residual, res.dual_residual)) {
        res.x = px;
        res.y = py;
        res.primal_residual = pp;
        res.dual_residual = pd;
        res.polished = true;
      }
    }
  }
  const bool small = res.primal_residual <= s.success_tol && res.dual_residual <= s.success_tol;
  res.status = (converged || res.polished) && small ? QpStatus::kSolved : QpStatus::kMaxIterations;
  return res;
}

}  // namespace cssdf
