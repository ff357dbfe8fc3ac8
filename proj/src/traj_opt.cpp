#include "cssdf/traj_opt.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>

#include "cssdf/errors.hpp"

namespace cssdf {

std::pair<double, double> safety_penalty(double phi, const SafetyPenaltyParams& params) {
  if (phi < 0.0) {
    const double e = std::exp(-phi / params.d0);
    const double shim = params.shim ? std::exp(-params.alpha * params.d0) : 0.0;
    return {e - 1.0 + shim, -e / params.d0};
  }
  const double e = std::exp(-params.alpha * (phi + params.d0));
  return {e, -params.alpha * e};
}

namespace {

FieldValue checked_query(const ConfigField& field, const Configuration& q) {
  FieldValue v = field.query(q);
  if (!std::isfinite(v.value) || !v.grad.allFinite())
    throw OptimizationError("trajectory objective: non-finite field value");
  return v;
}

// Symmetric hinge: returns the excess of |x| over the limit and its sign.
double excess(double x, double limit, double& sign) {
  sign = x >= 0.0 ? 1.0 : -1.0;
  return std::max(0.0, std::abs(x) - limit);
}

}  // namespace

ObjectiveTerms objective(const SplineTrajectory& traj, const ConfigField* field, const TrajWeights& weights,
                         const TrajBounds* bounds, ObjectiveGradient* grad) {
  const int N = traj.segments();
  const int n = traj.dof();
  const auto& q = traj.q;
  const auto& m = traj.m;
  const auto& T = traj.T;
  ObjectiveGradient local;
  ObjectiveGradient& g = grad ? *grad : local;
  g.dq = Eigen::MatrixXd::Zero(n, N + 1);
  g.dm = Eigen::MatrixXd::Zero(n, N + 1);
  g.dT = Eigen::VectorXd::Zero(N);
  ObjectiveTerms t;

  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd a = m.col(i), b = m.col(i + 1);
    const double k = a.squaredNorm() + a.dot(b) + b.squaredNorm();
    t.smooth += weights.smooth * T[i] / 3.0 * k;
    g.dm.col(i) += weights.smooth * T[i] / 3.0 * (2.0 * a + b);
    g.dm.col(i + 1) += weights.smooth * T[i] / 3.0 * (a + 2.0 * b);
    g.dT[i] += weights.smooth * k / 3.0;

    t.time += weights.time * T[i];
    g.dT[i] += weights.time;

    if (i > 0) {
      const double d = T[i] - T[i - 1];
      t.regularity += weights.regularity * d * d;
      g.dT[i] += 2.0 * weights.regularity * d;
      g.dT[i - 1] -= 2.0 * weights.regularity * d;
    }

    const Eigen::VectorXd dq = q.col(i + 1) - q.col(i);
    const double len = dq.norm();
    t.length += weights.length * len;
    if (len > 0.0) {
      g.dq.col(i + 1) += weights.length * dq / len;
      g.dq.col(i) -= weights.length * dq / len;
    }
  }

  if (weights.safety != 0.0) {
    if (!field) throw InvalidInputError("trajectory objective: safety term needs a field");
    for (int k = 0; k <= N; ++k) {
      const FieldValue v = checked_query(*field, q.col(k));
      const auto [p, dp] = safety_penalty(v.value, weights.penalty);
      t.safety += weights.safety * p;
      g.dq.col(k) += weights.safety * dp * v.grad;
    }
    for (int i = 0; i < N; ++i) {
      for (int j = 1; j <= weights.interior_samples; ++j) {
        const double s = static_cast<double>(j) / (weights.interior_samples + 1);
        const SegmentSample smp = sample_segment(traj, i, s);
        const FieldValue v = checked_query(*field, smp.q);
        const auto [p, dp] = safety_penalty(v.value, weights.penalty);
        t.safety += weights.safety * p;
        const Eigen::VectorXd gv = weights.safety * dp * v.grad;
        g.dq.col(i) += smp.d_qi * gv;
        g.dq.col(i + 1) += smp.d_qj * gv;
        g.dm.col(i) += smp.d_mi * gv;
        g.dm.col(i + 1) += smp.d_mj * gv;
        g.dT[i] += gv.dot(smp.d_T);
      }
    }
  }

  if (bounds) {
    const double w = bounds->weight;
    double sign = 0.0;
    if (bounds->q_min.size() == n && bounds->q_max.size() == n) {
      for (int k = 0; k <= N; ++k) {
        for (int d = 0; d < n; ++d) {
          const double lo = bounds->q_min[d] - q(d, k);
          const double hi = q(d, k) - bounds->q_max[d];
          if (lo > 0.0) {
            t.bounds += w * lo * lo;
            g.dq(d, k) -= 2.0 * w * lo;
          }
          if (hi > 0.0) {
            t.bounds += w * hi * hi;
            g.dq(d, k) += 2.0 * w * hi;
          }
        }
      }
    }
    if (bounds->v_max.size() == n) {
      for (int i = 0; i < N; ++i) {
        const Eigen::VectorXd dq = q.col(i + 1) - q.col(i);
        for (int end = 0; end < 2; ++end) {
          if (end == 1 && i != N - 1) continue;
          const Eigen::VectorXd v = end == 0 ? traj.start_velocity(i) : traj.end_velocity(i);
          for (int d = 0; d < n; ++d) {
            const double h = excess(v[d], bounds->v_max[d], sign);
            if (h <= 0.0) continue;
            t.bounds += w * h * h;
            const double dv = 2.0 * w * h * sign;
            g.dq(d, i + 1) += dv / T[i];
            g.dq(d, i) -= dv / T[i];
            if (end == 0) {
              g.dm(d, i) -= dv * T[i] / 3.0;
              g.dm(d, i + 1) -= dv * T[i] / 6.0;
              g.dT[i] += dv * (-dq[d] / (T[i] * T[i]) - m(d, i) / 3.0 - m(d, i + 1) / 6.0);
            } else {
              g.dm(d, i) += dv * T[i] / 6.0;
              g.dm(d, i + 1) += dv * T[i] / 3.0;
              g.dT[i] += dv * (-dq[d] / (T[i] * T[i]) + m(d, i) / 6.0 + m(d, i + 1) / 3.0);
            }
          }
        }
      }
    }
    if (bounds->a_max.size() == n) {
      for (int k = 0; k <= N; ++k) {
        for (int d = 0; d < n; ++d) {
          const double h = excess(m(d, k), bounds->a_max[d], sign);
          if (h <= 0.0) continue;
          t.bounds += w * h * h;
          g.dm(d, k) += 2.0 * w * h * sign;
        }
      }
    }
  }
  t.total = t.smooth + t.time + t.regularity + t.length + t.safety + t.bounds;
  return t;
}

TrajectoryProblem::TrajectoryProblem(SplineTrajectory initial, const ConfigField* field, TrajWeights weights,
                                     TrajBounds bounds)
    : initial_(std::move(initial)), field_(field), weights_(weights), bounds_(std::move(bounds)) {
  if (initial_.segments() < 1) throw InvalidInputError("trajectory: need at least one segment");
}

Eigen::VectorXd TrajectoryProblem::pack(const SplineTrajectory& traj) const {
  const int n = traj.dof(), N = traj.segments();
  Eigen::VectorXd x(n * (N - 1) + N);
  for (int k = 1; k < N; ++k) x.segment(n * (k - 1), n) = traj.q.col(k);
  x.tail(N) = traj.T.array().log().matrix();
  return x;
}

SplineTrajectory TrajectoryProblem::unpack(const Eigen::VectorXd& x) const {
  const int n = initial_.dof(), N = initial_.segments();
  Eigen::MatrixXd q = initial_.q;
  for (int k = 1; k < N; ++k) q.col(k) = x.segment(n * (k - 1), n);
  const Eigen::VectorXd T = x.tail(N).array().exp().matrix();
  return make_spline(q, T, initial_.v_start, initial_.v_end);
}

double TrajectoryProblem::evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
  const SplineTrajectory traj = unpack(x);
  ObjectiveGradient g;
  const ObjectiveTerms t = objective(traj, field_, weights_, &bounds_, grad ? &g : nullptr);
  if (grad) {
    accumulate_acceleration_adjoint(traj, g.dm, g.dq, g.dT);
    const int n = traj.dof(), N = traj.segments();
    grad->resize(x.size());
    for (int k = 1; k < N; ++k) grad->segment(n * (k - 1), n) = g.dq.col(k);
    grad->tail(N) = g.dT.cwiseProduct(traj.T);
  }
  return t.total;
}

double bound_violation(const SplineTrajectory& traj, const TrajBounds& bounds) {
  const int n = traj.dof(), N = traj.segments();
  double worst = 0.0;
  if (bounds.q_min.size() == n && bounds.q_max.size() == n) {
    for (int k = 0; k <= N; ++k) {
      worst = std::max(worst, (bounds.q_min - traj.q.col(k)).maxCoeff());
      worst = std::max(worst, (traj.q.col(k) - bounds.q_max).maxCoeff());
    }
  }
  if (bounds.v_max.size() == n) {
    for (int i = 0; i < N; ++i) {
      worst = std::max(worst, (traj.start_velocity(i).cwiseAbs() - bounds.v_max).maxCoeff());
      worst = std::max(worst, (traj.end_velocity(i).cwiseAbs() - bounds.v_max).maxCoeff());
    }
  }
  if (bounds.a_max.size() == n) {
    for (int k = 0; k <= N; ++k) worst = std::max(worst, (traj.m.col(k).cwiseAbs() - bounds.a_max).maxCoeff());
  }
  return worst;
}

OptimizeResult optimize(const SplineTrajectory& initial, const ConfigField* field, const TrajWeights& weights,
                        const TrajBounds& bounds, const OptimizeOptions& options) {
  const TrajectoryProblem problem(initial, field, weights, bounds);
  Eigen::VectorXd x = problem.pack(initial);
  Eigen::VectorXd g;
  double f = problem.evaluate(x, &g);
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> memory;
  OptimizeResult res;
  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    if (g.lpNorm<Eigen::Infinity>() <= options.grad_tol) {
      res.converged = true;
      break;
    }
    // Two-loop recursion.
    Eigen::VectorXd d = -g;
    std::vector<double> alpha(memory.size());
    for (std::size_t j = memory.size(); j-- > 0;) {
      const auto& [s, y] = memory[j];
      alpha[j] = s.dot(d) / y.dot(s);
      d -= alpha[j] * y;
    }
    if (!memory.empty()) {
      const auto& [s, y] = memory.back();
      d *= s.dot(y) / y.squaredNorm();
    } else {
      d /= std::max(1.0, g.norm());
    }
    for (std::size_t j = 0; j < memory.size(); ++j) {
      const auto& [s, y] = memory[j];
      const double beta = y.dot(d) / y.dot(s);
      d += (alpha[j] - beta) * s;
    }
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      memory.clear();
      d = -g / std::max(1.0, g.norm());
      slope = g.dot(d);
    }
    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd xn, gn;
    double fn = 0.0;
    for (int ls = 0; ls < 50; ++ls) {
      xn = x + step * d;
      fn = problem.evaluate(xn, &gn);
      if (std::isfinite(fn) && fn <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const Eigen::VectorXd s = xn - x, y = gn - g;
    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      memory.emplace_back(s, y);
      if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
    }
    x = std::move(xn);
    g = std::move(gn);
    f = fn;
  }
  res.grad_norm = g.lpNorm<Eigen::Infinity>();

  // Projection and time scaling.
  SplineTrajectory traj = problem.unpack(x);
  if (bounds.q_min.size() == traj.dof() && bounds.q_max.size() == traj.dof()) {
    for (int k = 0; k <= traj.segments(); ++k)
      traj.q.col(k) = traj.q.col(k).cwiseMax(bounds.q_min).cwiseMin(bounds.q_max);
    traj.m = solve_accelerations(traj.q, traj.T, traj.v_start, traj.v_end);
  }
  for (int pass = 0; pass < 8; ++pass) {
    double k = 1.0;
    if (bounds.v_max.size() == traj.dof()) {
      for (int i = 0; i < traj.segments(); ++i) {
        k = std::max(k, (traj.start_velocity(i).cwiseAbs().cwiseQuotient(bounds.v_max)).maxCoeff());
        k = std::max(k, (traj.end_velocity(i).cwiseAbs().cwiseQuotient(bounds.v_max)).maxCoeff());
      }
    }
    if (bounds.a_max.size() == traj.dof()) {
      for (int i = 0; i <= traj.segments(); ++i)
        k = std::max(k, std::sqrt((traj.m.col(i).cwiseAbs().cwiseQuotient(bounds.a_max)).maxCoeff()));
    }
    if (k <= 1.0) break;
    traj.T *= k * (1.0 + 1e-9);
    traj.m = solve_accelerations(traj.q, traj.T, traj.v_start, traj.v_end);
  }
  res.traj = traj;
  res.terms = objective(traj, field, weights, &bounds);
  res.max_violation = bound_violation(traj, bounds);
  res.feasible = res.max_violation <= 1e-6;
  return res;
}

double path_length(const std::vector<Configuration>& path) {
  double len = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) len += (path[i] - path[i - 1]).norm();
  return len;
}

SplineTrajectory spline_from_path(const std::vector<Configuration>& path, int segments, double speed) {
  if (path.size() < 2 || segments < 1 || !(speed > 0.0))
    throw InvalidInputError("spline_from_path: need two waypoints, one segment and a positive speed");
  const int n = static_cast<int>(path.front().size());
  std::vector<double> cum(path.size(), 0.0);
  for (std::size_t i = 1; i < path.size(); ++i) cum[i] = cum[i - 1] + (path[i] - path[i - 1]).norm();
  const double total = cum.back();
  if (!(total > 0.0)) throw InvalidInputError("spline_from_path: start and goal coincide");
  Eigen::MatrixXd q(n, segments + 1);
  std::size_t seg = 1;
  for (int k = 0; k <= segments; ++k) {
    const double s = total * k / segments;
    while (seg < path.size() - 1 && cum[seg] < s) ++seg;
    const double span = cum[seg] - cum[seg - 1];
    const double f = span > 0.0 ? std::clamp((s - cum[seg - 1]) / span, 0.0, 1.0) : 0.0;
    q.col(k) = path[seg - 1] + f * (path[seg] - path[seg - 1]);
  }
  q.col(0) = path.front();
  q.col(segments) = path.back();
  const Eigen::VectorXd T = Eigen::VectorXd::Constant(segments, std::max(1e-3, total / segments / speed));
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  return make_spline(q, T, zero, zero);
}

TrajectoryMetrics measure_trajectory(const SplineTrajectory& traj,
                                     const std::function<bool(const Configuration&)>& colliding,
                                     std::size_t samples) {
  if (samples < 2) throw InvalidInputError("measure_trajectory: need at least two samples");
  TrajectoryMetrics out;
  out.samples = samples;
  const double total = traj.total_time();
  std::size_t hits = 0;
  Eigen::VectorXd prev;
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = total * static_cast<double>(k) / static_cast<double>(samples - 1);
    const Eigen::VectorXd q = traj.eval(t).q;
    if (colliding(q)) ++hits;
    if (k > 0) out.length += (q - prev).norm();
    prev = q;
  }
  out.collision_rate = 100.0 * static_cast<double>(hits) / static_cast<double>(samples);
  return out;
}

void save_trajectory_csv(const SplineTrajectory& traj, const std::string& path, std::size_t samples) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trajectory: " + path);
  const int n = traj.dof();
  out << 't';
  for (const char* name : {"q", "qd", "qdd"})
    for (int d = 0; d < n; ++d) out << ',' << name << '_' << d + 1;
  out << '\n' << std::setprecision(12);
  const double total = traj.total_time();
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = samples > 1 ? total * static_cast<double>(k) / static_cast<double>(samples - 1) : 0.0;
    const SplineState s = traj.eval(t);
    out << t;
    for (const auto* v : {&s.q, &s.qd, &s.qdd})
      for (int d = 0; d < n; ++d) out << ',' << (*v)[d];
    out << '\n';
  }
}

}  // namespace cssdf
