#include <doctest.h>

#include <cmath>
#include <random>

#include "cssdf/errors.hpp"
#include "cssdf/robot_model.hpp"

using namespace cssdf;

TEST_CASE("planar forward kinematics matches the closed form") {
  const RobotModel arm = make_planar_arm({1.0, 0.8}, 0.05, 3);
  Configuration q(2);
  q << 0.4, -1.1;
  const auto frames = arm.joint_frames(q);
  const Eigen::Vector3d elbow(std::cos(0.4), std::sin(0.4), 0.0);
  CHECK((frames[1].translation() - elbow).norm() < 1e-12);
  // Last sphere of the second capsule sits at the tip.
  const auto spheres = arm.forward_spheres(q);
  const Eigen::Vector3d tip = elbow + 0.8 * Eigen::Vector3d(std::cos(-0.7), std::sin(-0.7), 0.0);
  CHECK((spheres.back().center - tip).norm() < 1e-12);
}

TEST_CASE("self pairs skip adjacent links") {
  const RobotModel model = load_robot(CSSDF_DATA_DIR "/robots/planar2.json");
  // Base body (parent -1) against the second link (parent 1) is the only pair.
  for (const auto& [a, b] : model.self_pairs()) {
    const int la = model.forward_spheres(Configuration::Zero(2))[a].link;
    const int lb = model.forward_spheres(Configuration::Zero(2))[b].link;
    const int ja = model.links()[la].parent_joint, jb = model.links()[lb].parent_joint;
    CHECK(std::abs(ja - jb) > 1);
  }
  CHECK(!model.self_pairs().empty());
}

TEST_CASE("limit distance is signed and ignores continuous joints") {
  RobotModel limited = make_planar_arm({1.0, 1.0}, 0.1, 3, false);
  Configuration q(2);
  q << 0.0, 3.0;
  Configuration g;
  CHECK(limited.limit_distance(q, &g) == doctest::Approx(kPi - 3.0));
  CHECK(g[1] == doctest::Approx(-1.0));
  const RobotModel free_arm = make_planar_arm({1.0, 1.0}, 0.1, 3, true);
  CHECK(std::isinf(free_arm.limit_distance(q)));
}

TEST_CASE("robot JSON round trip and schema errors") {
  const RobotModel model = load_robot(CSSDF_DATA_DIR "/robots/arm7.json");
  const RobotModel again = robot_from_json_text(robot_to_json_text(model));
  Configuration q = Configuration::LinSpaced(model.dof(), -0.5, 0.7);
  const auto a = model.forward_spheres(q), b = again.forward_spheres(q);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i].center - b[i].center).norm() < 1e-12);
  CHECK_THROWS_AS(robot_from_json_text("{"), SchemaError);
  CHECK_THROWS_AS(robot_from_json_text(R"({"version": 9, "point_dim": 2, "joints": [], "links": []})"),
                  VersionMismatchError);
  CHECK_THROWS_AS(load_robot("/nonexistent/robot.json"), IoError);
}

TEST_CASE("reach bounds every sphere") {
  const RobotModel model = load_robot(CSSDF_DATA_DIR "/robots/arm7.json");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int t = 0; t < 200; ++t) {
    Configuration q(model.dof());
    for (int j = 0; j < q.size(); ++j) q[j] = u(rng);
    for (const auto& s : model.forward_spheres(q))
      CHECK((s.center - model.base_position()).norm() + s.radius <= model.total_reach() + 1e-9);
  }
}

namespace {

// Plain 4x4 homogeneous matrices with Rodrigues' rotation formula.
Eigen::Matrix4d rotation_about(const Eigen::Vector3d& axis, double angle) {
  const Eigen::Vector3d k = axis.normalized();
  Eigen::Matrix3d K;
  K << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  T.topLeftCorner<3, 3>() = Eigen::Matrix3d::Identity() + std::sin(angle) * K + (1 - std::cos(angle)) * K * K;
  return T;
}

Eigen::Matrix4d translation(const Eigen::Vector3d& t) {
  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  T.topRightCorner<3, 1>() = t;
  return T;
}

}  // namespace

TEST_CASE("forward kinematics matches a transform-chain composition") {
  const RobotModel model = load_robot(CSSDF_DATA_DIR "/robots/arm7.json");
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int t = 0; t < 50; ++t) {
    Configuration q(model.dof());
    for (int j = 0; j < q.size(); ++j) q[j] = u(rng);
    std::vector<Eigen::Matrix4d> frames;
    Eigen::Matrix4d T = model.base_pose().matrix();
    for (int j = 0; j < model.dof(); ++j) {
      T = T * translation(model.joints()[j].offset) * rotation_about(model.joints()[j].axis, q[j]);
      frames.push_back(T);
    }
    const auto world = model.forward_spheres(q);
    std::size_t k = 0;
    for (const auto& link : model.links()) {
      const Eigen::Matrix4d F = link.parent_joint < 0 ? model.base_pose().matrix() : frames[link.parent_joint];
      for (const auto& s : link.local_spheres) {
        const Eigen::Vector4d c = F * Eigen::Vector4d(s.center.x(), s.center.y(), s.center.z(), 1.0);
        REQUIRE(k < world.size());
        CHECK((world[k].center - c.head<3>()).norm() <= 1e-12);
        ++k;
      }
    }
    CHECK(k == world.size());
  }
}

TEST_CASE("workspace box half-width is reach times extension") {
  const RobotModel arm = make_planar_arm({1.0, 1.0}, 0.1, 5);
  CHECK(arm.workspace_bounds(1.0).max.x() == doctest::Approx(2.1));
  CHECK(arm.workspace_bounds(1.0).min.y() == doctest::Approx(-2.1));
  CHECK(arm.workspace_bounds(1.5).max.x() == doctest::Approx(3.15));

  const RobotModel model = load_robot(CSSDF_DATA_DIR "/robots/arm7.json");
  const Aabb box = model.workspace_bounds(1.0);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  bool inside = true;
  for (int t = 0; t < 10000; ++t) {
    Configuration q(model.dof());
    for (int j = 0; j < q.size(); ++j) q[j] = u(rng);
    for (const auto& s : model.forward_spheres(q)) inside = inside && box.contains(s.center, 3);
  }
  CHECK(inside);
}
