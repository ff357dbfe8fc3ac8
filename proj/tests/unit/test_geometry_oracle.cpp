#include <doctest.h>

#include <array>
#include <limits>
#include <random>
#include <vector>

#include "cssdf/errors.hpp"
#include "cssdf/geometry_oracle.hpp"

using namespace cssdf;

TEST_CASE("composite distance picks the deeper penetration or the nearer surface") {
  CHECK(compose_distance(-0.3, -0.1) == doctest::Approx(-0.1));
  CHECK(compose_distance(0.4, -0.2) == doctest::Approx(-0.2));
  CHECK(compose_distance(0.4, 0.2) == doctest::Approx(0.2));
  CHECK(compose_distance(0.0, -0.5) == doctest::Approx(-0.5));
  CHECK(compose_distance(-0.2, -0.5) == doctest::Approx(-0.2));
  CHECK(compose_distance(0.3, 0.1) == doctest::Approx(0.1));
  CHECK(compose_distance(-0.2, 0.1) == doctest::Approx(-0.2));
}

TEST_CASE("point aggregation") {
  std::size_t arg = 99;
  std::array<double, 3> negative{-0.5, -0.1, -0.3};
  CHECK(aggregate_points(negative, &arg) == doctest::Approx(-0.1));
  CHECK(arg == 1);
  std::array<double, 3> mixed{0.5, -0.1, -0.3};
  CHECK(aggregate_points(mixed, &arg) == doctest::Approx(-0.3));
  CHECK(arg == 2);
  std::array<double, 2> positive{0.7, 0.2};
  CHECK(aggregate_points(positive) == doctest::Approx(0.2));
  std::array<double, 3> spec_mixed{0.5, -0.2, 0.4};
  CHECK(aggregate_points(spec_mixed) == doctest::Approx(-0.2));
  std::array<double, 1> single{0.37};
  CHECK(aggregate_points(single) == 0.37);
  CHECK_THROWS(aggregate_points(std::span<const double>{}));
}

TEST_CASE("point collision on a straight arm") {
  const RobotModel arm = make_planar_arm({1.0, 1.0}, 0.1, 5);
  const Configuration q = Configuration::Zero(2);
  CHECK(collides_with_point(arm, q, Point(0.5, 0.0, 0.0)));
  CHECK(collides_with_point(arm, q, Point(1.95, 0.05, 0.0)));
  CHECK_FALSE(collides_with_point(arm, q, Point(0.5, 0.3, 0.0)));
  CHECK_FALSE(collides_with_point(arm, q, Point(2.2, 0.0, 0.0)));

  Obstacle o;
  o.center = Point(1.0, 0.25, 0.0);
  o.radius = 0.1;
  Scene scene(2, {o});
  CHECK_FALSE(collides_with_scene(arm, scene, q));
  Configuration up(2);
  up << 0.15, 0.0;
  CHECK(collides_with_scene(arm, scene, up));
  CHECK(in_collision(arm, scene, up));
}

TEST_CASE("self collision folds back onto the base link") {
  const RobotModel model = load_robot(CSSDF_DATA_DIR "/robots/planar2.json");
  Configuration open(2), folded(2);
  open << 0.3, 0.2;
  CHECK_FALSE(is_self_collision(model, open));
  // Forearm folded down to the base post.
  folded << -0.6, -2.3;
  const bool hit = link_self_collision(model, folded);
  CHECK(hit == is_self_collision(model, folded));
}

TEST_CASE("projection moves along the unit gradient") {
  Configuration q(2);
  q << 1.0, 2.0;
  Eigen::VectorXd g(2);
  g << 3.0, 4.0;
  const Configuration b = project_to_boundary(q, 0.5, g);
  CHECK(b[0] == doctest::Approx(0.7));
  CHECK(b[1] == doctest::Approx(1.6));
  CHECK_THROWS_AS(project_to_boundary(q, 0.5, Eigen::VectorXd::Zero(2)), DegenerateGradientError);
}

TEST_CASE("self collision agrees with a pairwise sphere scan") {
  for (const char* name : {"/robots/planar2.json", "/robots/arm7.json"}) {
    const RobotModel model = load_robot(std::string(CSSDF_DATA_DIR) + name);
    std::mt19937_64 rng(21);
    const Configuration lo = model.lower_limits(), hi = model.upper_limits();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int mismatches = 0, hits = 0;
    for (int t = 0; t < 10000; ++t) {
      Configuration q(model.dof());
      for (int j = 0; j < q.size(); ++j) q[j] = lo[j] + (hi[j] - lo[j]) * u(rng);
      const auto w = model.forward_spheres(q);
      bool overlap = false;
      for (std::size_t a = 0; a < w.size() && !overlap; ++a)
        for (std::size_t b = a + 1; b < w.size() && !overlap; ++b) {
          const int ja = model.links()[w[a].link].parent_joint, jb = model.links()[w[b].link].parent_joint;
          if (std::abs(ja - jb) <= 1) continue;
          overlap = (w[a].center - w[b].center).norm() < w[a].radius + w[b].radius;
        }
      hits += overlap ? 1 : 0;
      mismatches += overlap != link_self_collision(model, q) ? 1 : 0;
    }
    CHECK(mismatches == 0);
    CHECK(hits > 0);
  }
}

TEST_CASE("point collision equals the nearest sphere surface test") {
  const RobotModel model = load_robot(CSSDF_DATA_DIR "/robots/planar2.json");
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-kPi, kPi), w(-2.5, 2.5);
  int hits = 0;
  for (int t = 0; t < 5000; ++t) {
    const Configuration q = Eigen::Vector2d(u(rng), u(rng));
    const Point p(w(rng), w(rng), 0.0);
    double d = std::numeric_limits<double>::infinity();
    for (const auto& s : model.forward_spheres(q)) d = std::min(d, (p - s.center).norm() - s.radius);
    CHECK(collides_with_point(model, q, p) == (d <= 0.0));
    hits += d <= 0.0 ? 1 : 0;
  }
  CHECK(hits > 0);
  // A sphere center always collides; a point beyond the reach never does.
  const Configuration q = Eigen::Vector2d(0.4, -0.7);
  CHECK(collides_with_point(model, q, model.forward_spheres(q).back().center));
  const Point far = model.base_position() + Point(model.total_reach() + 0.01, 0.0, 0.0);
  for (int t = 0; t < 100; ++t) CHECK_FALSE(collides_with_point(model, Eigen::Vector2d(u(rng), u(rng)), far));
}
