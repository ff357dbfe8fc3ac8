#include "cssdf/safe_mpc.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "cssdf/errors.hpp"
#include "cssdf/geometry_oracle.hpp"

namespace cssdf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void MpcProblem::validate(int dof) const {
  if (horizon < 1) throw InvalidInputError("mpc: horizon must be >= 1");
  if (!(dt > 0.0)) throw InvalidInputError("mpc: dt must be positive");
  if (!(gamma > 0.0)) throw InvalidInputError("mpc: gamma must be positive");
  if (Q.size() != dof || R.size() != dof || (Q.array() <= 0.0).any() || (R.array() <= 0.0).any())
    throw InvalidInputError("mpc: Q and R need positive diagonals of size dof");
  if (q_min.size() != dof || q_max.size() != dof || u_min.size() != dof || u_max.size() != dof)
    throw InvalidInputError("mpc: bounds need size dof");
  if ((q_min.array() > q_max.array()).any() || (u_min.array() > u_max.array()).any())
    throw InvalidInputError("mpc: lower bound above upper bound");
  if (reference.empty()) throw InvalidInputError("mpc: empty reference");
  for (const auto& r : reference)
    if (r.size() != dof) throw InvalidInputError("mpc: reference has wrong dimension");
  if (rows_per_step < 1) throw InvalidInputError("mpc: rows_per_step must be >= 1");
}

const Configuration& MpcProblem::reference_at(int k) const {
  return reference[std::min<std::size_t>(static_cast<std::size_t>(k), reference.size() - 1)];
}

MpcProblem default_mpc_problem(const RobotModel& model, int horizon, double u_max) {
  const int n = model.dof();
  MpcProblem p;
  p.horizon = horizon;
  p.Q = Eigen::VectorXd::Ones(n);
  p.R = Eigen::VectorXd::Constant(n, 1e-4);
  p.q_min = model.lower_limits();
  p.q_max = model.upper_limits();
  p.u_min = Eigen::VectorXd::Constant(n, -u_max);
  p.u_max = Eigen::VectorXd::Constant(n, u_max);
  return p;
}

bool linearized_safety_row(const FieldValue& phi, double gamma, double dt, SafetyRow& row) {
  row.a = phi.grad;
  row.b = dt * (gamma - phi.value);
  return !(phi.grad.norm() <= 1e-12 && phi.value < gamma);
}

MpcQp build_qp(const MpcProblem& pr, const ConfigField* field, const Configuration& q0,
               const std::vector<Configuration>& nominal) {
  const int n = static_cast<int>(q0.size());
  pr.validate(n);
  const int H = pr.horizon;
  if (static_cast<int>(nominal.size()) < H) throw InvalidInputError("mpc: nominal trajectory shorter than H");
  const int nv = n * H;
  const double dt = pr.dt;

  MpcQp out;
  QpInstance& qp = out.qp;
  qp.P = Eigen::MatrixXd::Zero(nv, nv);
  qp.q = Eigen::VectorXd::Zero(nv);
  // q_{k+1} - ref_k = (q0 - ref_k) + dt * sum_{j<=k} u_j, per coordinate.
  for (int k = 0; k < H; ++k) {
    const Eigen::VectorXd e = q0 - pr.reference_at(k);
    out.constant += e.dot(pr.Q.cwiseProduct(e));
    for (int d = 0; d < n; ++d) {
      for (int a = 0; a <= k; ++a) {
        qp.q[a * n + d] += 2.0 * dt * pr.Q[d] * e[d];
        for (int b = 0; b <= k; ++b) qp.P(a * n + d, b * n + d) += 2.0 * dt * dt * pr.Q[d];
      }
    }
  }
  for (int k = 0; k < H; ++k)
    for (int d = 0; d < n; ++d) qp.P(k * n + d, k * n + d) += 2.0 * pr.R[d];

  struct Row {
    Eigen::VectorXd c;
    double l, u;
  };
  std::vector<Row> rows;
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> input_box(H, {pr.u_min, pr.u_max});

  if (field) {
    out.min_phi = field->query(q0).value;
    const double c = pr.barrier_form ? pr.barrier_rate * dt : dt;
    const double target = pr.barrier_form ? 0.0 : pr.gamma;
    for (int k = 0; k < H; ++k) {
      const std::vector<FieldValue> cands = field->query_rows(nominal[k], pr.rows_per_step);
      for (const auto& fv : cands) {
        if (!std::isfinite(fv.value) || !fv.grad.allFinite())
          throw OptimizationError("mpc: non-finite field value");
        SafetyRow sr;
        if (!linearized_safety_row(fv, pr.gamma, dt, sr)) {
          input_box[k] = {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
          out.emergency_steps.push_back(k);
          break;
        }
        // g'(dt u_k) + c g'(q_k - qbar_k) >= c (target - phibar), divided by dt.
        Row r{Eigen::VectorXd::Zero(nv), 0.0, kInf};
        r.c.segment(k * n, n) = sr.a;
        for (int j = 0; j < k; ++j) r.c.segment(j * n, n) += c * sr.a;
        r.l = c / dt * (target - fv.value - sr.a.dot(q0 - nominal[k]));
        rows.push_back(std::move(r));
        ++out.safety_rows;
      }
    }
  }
  for (int k = 0; k < H; ++k) {
    for (int d = 0; d < n; ++d) {
      Row r{Eigen::VectorXd::Zero(nv), input_box[k].first[d], input_box[k].second[d]};
      r.c[k * n + d] = 1.0;
      rows.push_back(std::move(r));
    }
  }
  for (int k = 0; k < H; ++k) {
    for (int d = 0; d < n; ++d) {
      Row r{Eigen::VectorXd::Zero(nv), 0.0, 0.0};
      for (int j = 0; j <= k; ++j) r.c[j * n + d] = dt;
      // A start outside the box may not be pushed further out.
      r.l = std::min(pr.q_min[d] - q0[d], 0.0);
      r.u = std::max(pr.q_max[d] - q0[d], 0.0);
      rows.push_back(std::move(r));
    }
  }
  const int m = static_cast<int>(rows.size());
  qp.C.resize(m, nv);
  qp.l.resize(m);
  qp.u.resize(m);
  for (int i = 0; i < m; ++i) {
    qp.C.row(i) = rows[i].c.transpose();
    qp.l[i] = rows[i].l;
    qp.u[i] = rows[i].u;
  }
  return out;
}

MpcController::MpcController(const ConfigField* field, MpcProblem problem, QpSettings settings)
    : field_(field), problem_(std::move(problem)), settings_(settings) {}

void MpcController::reset() {
  plan_.resize(0);
  last_u_.resize(0);
  warm_y_.resize(0);
  failures_ = 0;
}

MpcStep MpcController::step(const Configuration& q) {
  const int n = static_cast<int>(q.size());
  const int H = problem_.horizon;
  if (last_u_.size() != n) last_u_ = Eigen::VectorXd::Zero(n);

  // Shifted previous plan as the warm start and linearization trajectory.
  Eigen::VectorXd shifted = Eigen::VectorXd::Zero(n * H);
  if (plan_.size() == n * H) {
    for (int k = 0; k < H; ++k) shifted.segment(k * n, n) = plan_.segment(std::min(k + 1, H - 1) * n, n);
  }
  std::vector<Configuration> nominal(H);
  nominal[0] = q;
  for (int k = 1; k < H; ++k) nominal[k] = nominal[k - 1] + problem_.dt * shifted.segment((k - 1) * n, n);

  MpcStep out;
  const auto t0 = std::chrono::steady_clock::now();
  const MpcQp built = build_qp(problem_, field_, q, nominal);
  const Eigen::VectorXd* wy = warm_y_.size() == built.qp.rows() ? &warm_y_ : nullptr;
  const QpResult res = solve_qp(built.qp, settings_, &shifted, wy);
  out.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  out.status = res.status;
  out.min_phi = built.min_phi;
  out.primal_residual = res.primal_residual;
  out.dual_residual = res.dual_residual;
  out.emergency = !built.emergency_steps.empty() && built.emergency_steps.front() == 0;

  if (res.status == QpStatus::kSolved) {
    failures_ = 0;
    plan_ = res.x;
    warm_y_ = res.y;
    out.u = res.x.head(n);
  } else {
    ++failures_;
    out.fallback = true;
    plan_.resize(0);
    warm_y_.resize(0);
    out.u = failures_ >= 3 ? Eigen::VectorXd::Zero(n) : Eigen::VectorXd(0.5 * last_u_);
    out.emergency = out.emergency || failures_ >= 3;
  }
  out.u = out.u.cwiseMax(problem_.u_min).cwiseMin(problem_.u_max);
  last_u_ = out.u;
  return out;
}

void Episode::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write episode log: " + path);
  const int n = rows.empty() ? 0 : static_cast<int>(rows.front().q.size());
  out << 't';
  for (int d = 0; d < n; ++d) out << ",q_" << d + 1;
  for (int d = 0; d < n; ++d) out << ",u_" << d + 1;
  out << ",min_phi,solve_ms,status,colliding\n" << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.t;
    for (int d = 0; d < n; ++d) out << ',' << r.q[d];
    for (int d = 0; d < n; ++d) out << ',' << r.u[d];
    out << ',' << r.min_phi << ',' << r.solve_ms << ',' << r.status << ',' << (r.colliding ? 1 : 0) << '\n';
  }
}

Episode simulate(const RobotModel& model, const Scene& scene, MpcController& controller,
                 const std::function<void(const Scene&)>& observe, const Configuration& q0,
                 const Configuration& goal, double duration, double goal_tol) {
  if (!(duration > 0.0)) throw InvalidInputError("simulate: duration must be positive");
  const double dt = controller.problem().dt;
  const auto steps = static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
  Episode ep;
  ep.rows.reserve(steps);
  Configuration q = q0;
  double total_ms = 0.0;
  std::size_t collisions = 0;
  auto& m = ep.metrics;
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * dt;
    const Scene now = scene.at(t);
    if (observe) observe(now);
    EpisodeRow row;
    row.t = t;
    row.q = q;
    row.colliding = in_collision(model, now, q);
    collisions += row.colliding ? 1 : 0;
    const MpcStep st = controller.step(q);
    row.u = st.u;
    row.min_phi = st.min_phi;
    row.solve_ms = st.solve_ms;
    row.status = st.fallback ? "fallback-" + to_string(st.status) : to_string(st.status);
    total_ms += st.solve_ms;
    if (st.status == QpStatus::kSolved) {
      ++m.solved;
      m.max_residual = std::max({m.max_residual, st.primal_residual, st.dual_residual});
    }
    if (st.fallback) ++m.fallbacks;
    m.max_control = std::max(m.max_control, st.u.lpNorm<Eigen::Infinity>());
    ep.rows.push_back(std::move(row));
    q += dt * st.u;
  }
  m.steps = steps;
  m.collision_rate = steps ? 100.0 * static_cast<double>(collisions) / static_cast<double>(steps) : 0.0;
  m.control_frequency = total_ms > 0.0 ? 1000.0 * static_cast<double>(steps) / total_ms : 0.0;
  m.final_error = (q - goal).lpNorm<Eigen::Infinity>();
  m.goal_reached = m.final_error <= goal_tol;
  return ep;
}

}  // namespace cssdf
