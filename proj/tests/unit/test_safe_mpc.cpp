#include <doctest.h>

#include <cmath>
#include <random>

#include "cssdf/config_field.hpp"
#include "cssdf/errors.hpp"
#include "cssdf/geometry_oracle.hpp"
#include "cssdf/scene.hpp"
#include "cssdf/safe_mpc.hpp"

using namespace cssdf;

namespace {

MpcProblem planar_problem(int H, const Configuration& goal) {
  MpcProblem p;
  p.horizon = H;
  p.Q = Eigen::Vector2d(1.0, 2.0);
  p.R = Eigen::Vector2d(1e-3, 2e-3);
  p.q_min = Eigen::Vector2d(-3, -3);
  p.q_max = Eigen::Vector2d(3, 3);
  p.u_min = Eigen::Vector2d(-1, -1);
  p.u_max = Eigen::Vector2d(1, 1);
  p.reference = {goal};
  return p;
}

// phi(q) = q_x - 0.5: a wall at q_x = 0.5.
LambdaField wall() {
  return LambdaField(2, [](const Configuration& q) { return FieldValue{q[0] - 0.5, Eigen::Vector2d(1.0, 0.0)}; });
}

}  // namespace

TEST_CASE("safety row coefficients") {
  SafetyRow row;
  CHECK(linearized_safety_row(FieldValue{0.02, Eigen::Vector2d(0.6, 0.8)}, 0.05, 0.01, row));
  CHECK(row.a[1] == doctest::Approx(0.8));
  CHECK(row.b == doctest::Approx(3e-4));
  CHECK_FALSE(linearized_safety_row(FieldValue{0.02, Eigen::Vector2d::Zero()}, 0.05, 0.01, row));
  CHECK(linearized_safety_row(FieldValue{0.2, Eigen::Vector2d::Zero()}, 0.05, 0.01, row));
}

TEST_CASE("rows at and above the margin") {
  SafetyRow row;
  REQUIRE(linearized_safety_row(FieldValue{0.05, Eigen::Vector2d(0.6, 0.8)}, 0.05, 0.01, row));
  CHECK(row.b == doctest::Approx(0.0));  // a stationary step is active with zero margin
  REQUIRE(linearized_safety_row(FieldValue{0.15, Eigen::Vector2d(0.6, 0.8)}, 0.05, 0.01, row));
  CHECK(0.0 - row.b == doctest::Approx(0.01 * 0.1));
}

TEST_CASE("oracle rows predict the first-order change of the distance") {
  const RobotModel model = load_robot(CSSDF_DATA_DIR "/robots/planar2.json");
  OracleSceneField field(model, default_grid_spec(model, 201));
  field.update(load_scene(CSSDF_DATA_DIR "/scenes/two_circles.json"));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  int tried = 0, good = 0;
  while (tried < 200) {
    const Configuration q = Eigen::Vector2d(u(rng), u(rng));
    const FieldValue f = field.query(q);
    if (std::abs(f.value) < 0.1 || f.grad.norm() == 0.0) continue;
    ++tried;
    const double delta = 1e-3;
    const double change = field.query(q + delta * f.grad.normalized()).value - f.value;
    good += std::abs(change - delta) <= 0.1 * delta ? 1 : 0;
  }
  CHECK(good >= 180);
}

TEST_CASE("condensed cost equals the rolled-out cost") {
  const Configuration q0 = Eigen::Vector2d(0.1, -0.3);
  MpcProblem p = planar_problem(6, Eigen::Vector2d(1.0, 0.5));
  p.reference = {Eigen::Vector2d(0.2, 0.0), Eigen::Vector2d(0.5, 0.2), Eigen::Vector2d(1.0, 0.5)};
  const std::vector<Configuration> nominal(6, q0);
  const MpcQp m = build_qp(p, nullptr, q0, nominal);
  double at_zero = 0.0;
  for (int k = 0; k < 6; ++k) {
    const Eigen::VectorXd e = q0 - p.reference_at(k);
    at_zero += e.dot(p.Q.cwiseProduct(e));
  }
  CHECK(m.qp.cost(Eigen::VectorXd::Zero(12)) + m.constant == doctest::Approx(at_zero));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::VectorXd U(12);
  for (int i = 0; i < 12; ++i) U[i] = u(rng);
  double rolled = 0.0;
  Eigen::VectorXd q = q0;
  for (int k = 0; k < 6; ++k) {
    const Eigen::VectorXd uk = U.segment(2 * k, 2);
    q += p.dt * uk;
    const Eigen::VectorXd e = q - p.reference_at(k);
    rolled += e.dot(p.Q.cwiseProduct(e)) + uk.dot(p.R.cwiseProduct(uk));
  }
  CHECK(m.qp.cost(U) + m.constant == doctest::Approx(rolled).epsilon(1e-12));
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.qp.P);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("single-step horizon reaches the stationary optimum") {
  const Configuration q0 = Eigen::Vector2d(0.0, 0.0), goal(Eigen::Vector2d(0.003, -0.002));
  MpcProblem p = planar_problem(1, goal);
  MpcController ctrl(nullptr, p);
  const MpcStep s = ctrl.step(q0);
  CHECK(s.status == QpStatus::kSolved);
  for (int d = 0; d < 2; ++d) {
    const double expect = p.dt * p.Q[d] * (goal[d] - q0[d]) / (p.dt * p.dt * p.Q[d] + p.R[d]);
    CHECK(s.u[d] == doctest::Approx(expect).epsilon(1e-7));
  }
}

TEST_CASE("first input satisfies the safety row against a wall") {
  MpcProblem p = planar_problem(10, Eigen::Vector2d(2.0, 0.0));
  p.rows_per_step = 1;
  const LambdaField field = wall();
  MpcController ctrl(&field, p);
  Configuration q = Eigen::Vector2d(0.52, 0.0);
  for (int t = 0; t < 300; ++t) {
    const double phi0 = field.query(q).value;
    const MpcStep s = ctrl.step(q);
    REQUIRE(s.status == QpStatus::kSolved);
    CHECK(s.u[0] >= p.gamma - phi0 - 1e-6);
    q += p.dt * s.u;
  }
  // The goal lies behind the wall; the state settles near phi = gamma / (1 + dt).
  CHECK(field.query(q).value >= 0.0);
}

TEST_CASE("barrier form keeps phi decaying no faster than the rate") {
  MpcProblem p = planar_problem(10, Eigen::Vector2d(2.0, 0.0));
  p.barrier_form = true;
  p.barrier_rate = 2.0;
  p.rows_per_step = 1;
  const LambdaField field = LambdaField(
      2, [](const Configuration& q) { return FieldValue{0.5 - q[0], Eigen::Vector2d(-1.0, 0.0)}; });
  MpcController ctrl(&field, p);
  Configuration q = Eigen::Vector2d(0.0, 0.0);
  for (int t = 0; t < 200; ++t) {
    const double phi0 = field.query(q).value;
    const MpcStep s = ctrl.step(q);
    q += p.dt * s.u;
    CHECK(field.query(q).value >= (1.0 - p.barrier_rate * p.dt) * phi0 - 1e-9);
  }
  CHECK(field.query(q).value > 0.0);
}

TEST_CASE("zero gradient inside the margin pins the input") {
  MpcProblem p = planar_problem(3, Eigen::Vector2d(1.0, 1.0));
  const LambdaField flat(2, [](const Configuration&) { return FieldValue{0.0, Eigen::Vector2d::Zero()}; });
  const std::vector<Configuration> nominal(3, Configuration(Eigen::Vector2d::Zero()));
  const MpcQp m = build_qp(p, &flat, Eigen::Vector2d::Zero(), nominal);
  CHECK(m.emergency_steps.size() == 3);
  MpcController ctrl(&flat, p);
  const MpcStep s = ctrl.step(Eigen::Vector2d::Zero());
  CHECK(s.u.norm() < 1e-9);
}

TEST_CASE("empty scene episode converges and is deterministic") {
  const RobotModel model = make_planar_arm({1.0, 0.8}, 0.05, 5, true);
  MpcProblem p = default_mpc_problem(model, 10, 2.0);
  const Configuration q0 = Eigen::Vector2d(-0.5, 0.3), goal = Eigen::Vector2d(0.4, 0.9);
  p.reference = {goal};
  auto run = [&] {
    MpcController ctrl(nullptr, p);
    return simulate(model, Scene(2, {}), ctrl, [](const Scene&) {}, q0, goal, 3.0);
  };
  const Episode a = run(), b = run();
  CHECK(a.metrics.goal_reached);
  CHECK(a.metrics.collision_rate == 0.0);
  CHECK(a.metrics.max_control <= 2.0 + 1e-9);
  CHECK(a.metrics.solved == a.metrics.steps);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].u == b.rows[i].u);
}

TEST_CASE("invalid problems are rejected") {
  MpcProblem p = planar_problem(0, Eigen::Vector2d::Zero());
  CHECK_THROWS_AS(p.validate(2), InvalidInputError);
  p = planar_problem(5, Eigen::Vector2d::Zero());
  p.u_min[0] = 2.0;
  CHECK_THROWS_AS(p.validate(2), InvalidInputError);
}
