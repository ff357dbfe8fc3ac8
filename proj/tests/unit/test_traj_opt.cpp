#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cssdf/errors.hpp"
#include "cssdf/traj_opt.hpp"

using namespace cssdf;

namespace {

// Signed distance to a disc of radius 0.4 around (0.5, 0.55).
LambdaField disc_field() {
  return LambdaField(2, [](const Configuration& q) {
    Eigen::Vector2d c(0.5, 0.55);
    const Eigen::VectorXd d = q - c;
    return FieldValue{d.norm() - 0.4, d / d.norm()};
  });
}

SplineTrajectory wavy_spline() {
  Eigen::MatrixXd q(2, 5);
  q << -1.0, -0.4, 0.3, 0.8, 1.3,
       0.0, 0.2, -0.1, 0.3, 0.1;
  Eigen::VectorXd T(4);
  T << 0.6, 0.8, 0.5, 0.9;
  return make_spline(q, T, Eigen::Vector2d(0.1, 0.0), Eigen::Vector2d(0.0, -0.2));
}

TrajBounds tight_bounds() {
  TrajBounds b;
  b.q_min = Eigen::Vector2d(-1.1, -0.05);
  b.q_max = Eigen::Vector2d(1.2, 0.25);
  b.v_max = Eigen::Vector2d(0.8, 0.8);
  b.a_max = Eigen::Vector2d(1.0, 1.0);
  return b;
}

}  // namespace

TEST_CASE("penalty branches meet at zero and derivatives match differences") {
  SafetyPenaltyParams p;
  const double left = safety_penalty(-1e-300, p).first;
  const double right = safety_penalty(0.0, p).first;
  CHECK(std::abs(left - right) <= 1e-12);
  for (double phi : {-0.3, -0.05, -1e-3, 1e-3, 0.05, 0.4}) {
    const double h = 1e-7;
    const double fd = (safety_penalty(phi + h, p).first - safety_penalty(phi - h, p).first) / (2 * h);
    CHECK(std::abs(fd - safety_penalty(phi, p).second) <= 1e-6);
  }
  double prev = safety_penalty(-0.5, p).first;
  for (double phi = -0.49; phi < 1.0; phi += 0.01) {
    const double cur = safety_penalty(phi, p).first;
    CHECK(cur < prev);
    prev = cur;
  }
  SafetyPenaltyParams raw = p;
  raw.shim = false;
  CHECK(safety_penalty(-1e-12, raw).first == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(safety_penalty(0.0, raw).first == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(safety_penalty(50.0, p).first < 1e-100);
}

TEST_CASE("smoothness term equals the integrated squared acceleration") {
  // One segment with linear acceleration from a to b: T/3 (a^2 + ab + b^2).
  SplineTrajectory s = make_spline(Eigen::MatrixXd::Zero(1, 2), Eigen::VectorXd::Constant(1, 3.0),
                                   Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1));
  s.m(0, 0) = 1.0;
  s.m(0, 1) = 1.0;
  TrajWeights w;
  w.time = w.regularity = w.length = w.safety = 0.0;
  CHECK(objective(s, nullptr, w).smooth == doctest::Approx(3.0));
  s.m(0, 1) = -2.0;
  double integral = 0.0;
  const int steps = 200000;
  for (int k = 0; k < steps; ++k) {
    const double x = (k + 0.5) / steps;
    const double a = (1.0 - x) * 1.0 + x * -2.0;
    integral += a * a * 3.0 / steps;
  }
  CHECK(objective(s, nullptr, w).smooth == doctest::Approx(integral).epsilon(1e-8));
}

TEST_CASE("upper-triangular and symmetric smoothness kernels give the same trace") {
  const SplineTrajectory s = wavy_spline();
  TrajWeights w;
  w.time = w.regularity = w.length = w.safety = 0.0;
  double upper = 0.0, symmetric = 0.0;
  for (int i = 0; i < s.segments(); ++i) {
    Eigen::Matrix2d K;
    K << 1.0, 1.0, 0.0, 1.0;
    K *= s.T[i] / 3.0;
    const Eigen::Matrix2d Ks = 0.5 * (K + K.transpose());
    Eigen::MatrixXd mj(2, s.dof());
    mj.row(0) = s.m.col(i).transpose();
    mj.row(1) = s.m.col(i + 1).transpose();
    upper += (mj.transpose() * K * mj).trace();
    symmetric += (mj.transpose() * Ks * mj).trace();
  }
  CHECK(upper == doctest::Approx(symmetric).epsilon(1e-14));
  CHECK(objective(s, nullptr, w).smooth == doctest::Approx(upper).epsilon(1e-12));
}

TEST_CASE("a straight line at rest has only time and length cost") {
  Eigen::MatrixXd q(2, 2);
  q << 0.0, 3.0, 0.0, 4.0;
  const SplineTrajectory s = make_spline(q, Eigen::VectorXd::Constant(1, 2.0), Eigen::Vector2d::Zero(),
                                         Eigen::Vector2d::Zero());
  TrajWeights w;
  w.safety = 0.0;
  const ObjectiveTerms t = objective(s, nullptr, w);
  CHECK(t.length == doctest::Approx(5.0));
  CHECK(t.time == doctest::Approx(2.0));
  CHECK(t.regularity == 0.0);
}

TEST_CASE("objective partials match finite differences per term") {
  const LambdaField field = disc_field();
  const SplineTrajectory base = wavy_spline();
  const TrajBounds bounds = tight_bounds();
  for (int term = 0; term < 6; ++term) {
    TrajWeights w;
    w.smooth = term == 0;
    w.time = term == 1;
    w.regularity = term == 2;
    w.length = term == 3;
    w.safety = term == 4;
    const TrajBounds* b = term == 5 ? &bounds : nullptr;
    ObjectiveGradient g;
    objective(base, &field, w, b, &g);
    auto f = [&](const SplineTrajectory& s) { return objective(s, &field, w, b).total; };
    const double h = 1e-6;
    double worst = 0.0;
    for (int k = 0; k < base.q.cols(); ++k)
      for (int d = 0; d < 2; ++d) {
        SplineTrajectory a = base, c = base;
        a.q(d, k) += h;
        c.q(d, k) -= h;
        worst = std::max(worst, std::abs((f(a) - f(c)) / (2 * h) - g.dq(d, k)));
        a = base;
        c = base;
        a.m(d, k) += h;
        c.m(d, k) -= h;
        worst = std::max(worst, std::abs((f(a) - f(c)) / (2 * h) - g.dm(d, k)));
      }
    for (int i = 0; i < base.segments(); ++i) {
      SplineTrajectory a = base, c = base;
      a.T[i] += h;
      c.T[i] -= h;
      worst = std::max(worst, std::abs((f(a) - f(c)) / (2 * h) - g.dT[i]));
    }
    CAPTURE(term);
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("reduced problem gradient matches finite differences") {
  const LambdaField field = disc_field();
  const TrajectoryProblem problem(wavy_spline(), &field, TrajWeights{}, tight_bounds());
  const Eigen::VectorXd x = problem.pack(problem.initial());
  CHECK((problem.unpack(x).q - problem.initial().q).norm() < 1e-12);
  Eigen::VectorXd g;
  problem.evaluate(x, &g);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd a = x, b = x;
    a[i] += h;
    b[i] -= h;
    const double fd = (problem.evaluate(a, nullptr) - problem.evaluate(b, nullptr)) / (2 * h);
    CHECK(g[i] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("optimization lowers the cost, keeps endpoints and ends feasible") {
  const LambdaField field = disc_field();
  std::vector<Configuration> path{Eigen::Vector2d(-0.5, 0.6), Eigen::Vector2d(1.5, 0.6)};
  const SplineTrajectory init = spline_from_path(path, 8, 1.0);
  TrajBounds bounds;
  bounds.q_min = Eigen::Vector2d(-kPi, -kPi);
  bounds.q_max = Eigen::Vector2d(kPi, kPi);
  bounds.v_max = Eigen::Vector2d(1.5, 1.5);
  bounds.a_max = Eigen::Vector2d(5.0, 5.0);
  const OptimizeResult r = optimize(init, &field, TrajWeights{}, bounds);
  CHECK(r.feasible);
  CHECK(r.terms.total < objective(init, &field, TrajWeights{}, &bounds).total);
  CHECK((r.traj.q.col(0) - path[0]).norm() < 1e-12);
  CHECK((r.traj.q.col(8) - path[1]).norm() < 1e-12);
  // The straight line crosses the disc; the result clears it.
  const auto m = measure_trajectory(r.traj, [&](const Configuration& q) { return field.query(q).value < 0; });
  CHECK(m.collision_rate == 0.0);
  const auto m0 = measure_trajectory(init, [&](const Configuration& q) { return field.query(q).value < 0; });
  CHECK(m0.collision_rate > 0.0);
}

TEST_CASE("path helpers") {
  std::vector<Configuration> path{Eigen::Vector2d(0, 0), Eigen::Vector2d(3, 4), Eigen::Vector2d(3, 5)};
  CHECK(path_length(path) == doctest::Approx(6.0));
  const SplineTrajectory s = spline_from_path(path, 6, 2.0);
  CHECK(s.segments() == 6);
  CHECK(s.T[0] == doctest::Approx(0.5));
  CHECK(s.start_velocity(0).norm() < 1e-12);
  CHECK_THROWS_AS(spline_from_path({Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 1)}, 4), InvalidInputError);
  TrajBounds b;
  b.q_min = Eigen::Vector2d(-1, -1);
  b.q_max = Eigen::Vector2d(1, 1);
  CHECK(bound_violation(s, b) == doctest::Approx(4.0));
}

namespace {

double penetration_depth(const SplineTrajectory& traj, const ConfigField& field) {
  double depth = 0.0;
  const double total = traj.T.sum();
  for (int k = 0; k <= 2000; ++k) depth = std::max(depth, -field.query(traj.eval(total * k / 2000.0).q).value);
  return depth;
}

}  // namespace

TEST_CASE("a dominant length weight straightens the path") {
  std::vector<Configuration> path{Eigen::Vector2d(-1.0, 0.0), Eigen::Vector2d(0.0, 0.8), Eigen::Vector2d(1.0, 0.0)};
  const SplineTrajectory init = spline_from_path(path, 6, 1.0);
  TrajWeights w;
  w.safety = 0.0;
  w.length = 50.0;
  TrajBounds bounds;
  const OptimizeResult r = optimize(init, nullptr, w, bounds);
  const auto m = measure_trajectory(r.traj, [](const Configuration&) { return false; }, 4000);
  CHECK(m.length <= 1.01 * 2.0);
}

TEST_CASE("raising the safety weight never deepens the penetration") {
  const LambdaField field = disc_field();
  std::vector<Configuration> path{Eigen::Vector2d(-0.5, 0.6), Eigen::Vector2d(1.5, 0.6)};
  const SplineTrajectory init = spline_from_path(path, 8, 1.0);
  TrajBounds bounds;
  bounds.v_max = Eigen::Vector2d(1.5, 1.5);
  bounds.a_max = Eigen::Vector2d(5.0, 5.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda : {0.1, 1.0, 10.0, 30.0, 100.0}) {
    TrajWeights w;
    w.safety = lambda;
    const double depth = penetration_depth(optimize(init, &field, w, bounds).traj, field);
    CHECK(depth <= prev + 1e-9);
    prev = depth;
  }
  CHECK(prev == 0.0);
}
