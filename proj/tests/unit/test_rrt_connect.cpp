#include <doctest.h>

#include "cssdf/errors.hpp"
#include "cssdf/rrt_connect.hpp"

using namespace cssdf;

namespace {

// Wall at x in [-0.2, 0.2] with a gap at y in [0.6, 0.9].
bool walled(const Configuration& q) {
  return std::abs(q[0]) <= 0.2 && !(q[1] >= 0.6 && q[1] <= 0.9);
}

}  // namespace

TEST_CASE("edge check samples the segment") {
  CHECK(edge_free(Eigen::Vector2d(-1, 0.75), Eigen::Vector2d(1, 0.75), walled, 0.01));
  CHECK_FALSE(edge_free(Eigen::Vector2d(-1, 0), Eigen::Vector2d(1, 0), walled, 0.01));
}

TEST_CASE("direct connection when the straight edge is free") {
  const auto path = rrt_connect(Eigen::Vector2d(-1, 0.7), Eigen::Vector2d(1, 0.8), Eigen::Vector2d(-2, -2),
                                Eigen::Vector2d(2, 2), walled);
  CHECK(path.size() == 2);
}

TEST_CASE("plans through the gap and every edge is free") {
  const Configuration start = Eigen::Vector2d(-1, -1), goal = Eigen::Vector2d(1, -1);
  const auto path = rrt_connect(start, goal, Eigen::Vector2d(-2, -2), Eigen::Vector2d(2, 2), walled);
  REQUIRE(path.size() >= 3);
  CHECK(path.front() == start);
  CHECK(path.back() == goal);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) CHECK(edge_free(path[i], path[i + 1], walled, 0.02));
  bool through_gap = false;
  for (const auto& q : path) through_gap |= q[1] > 0.3;
  CHECK(through_gap);
}

TEST_CASE("shortcut keeps the ends and removes redundant waypoints") {
  std::vector<Configuration> zigzag;
  for (int i = 0; i <= 10; ++i) zigzag.push_back(Eigen::Vector2d(-1.5 + 0.1 * i, -1 + 0.05 * (i % 2)));
  const auto s = shortcut(zigzag, walled, 0.02);
  CHECK(s.size() == 2);
  CHECK(s.front() == zigzag.front());
  CHECK(s.back() == zigzag.back());
}

TEST_CASE("failures are reported") {
  auto blocked = [](const Configuration& q) { return std::abs(q[0]) <= 0.2; };
  RrtOptions opts;
  opts.max_samples = 300;
  CHECK_THROWS_AS(rrt_connect(Eigen::Vector2d(-1, 0), Eigen::Vector2d(1, 0), Eigen::Vector2d(-2, -2),
                              Eigen::Vector2d(2, 2), blocked, opts),
                  PlanningFailedError);
  CHECK_THROWS_AS(rrt_connect(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0), Eigen::Vector2d(-2, -2),
                              Eigen::Vector2d(2, 2), blocked),
                  InvalidInputError);
}
