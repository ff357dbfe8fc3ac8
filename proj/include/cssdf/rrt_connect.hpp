#pragma once

#include <cstdint>
#include <vector>

#include "cssdf/self_dataset.hpp"

namespace cssdf {

struct RrtOptions {
  double step = 0.2;             // rad, extension length
  double edge_resolution = 0.02; // rad between edge checks
  std::size_t max_samples = 10000;
  double goal_bias = 0.05;
  std::uint64_t seed = 1;
};

/// Collision-free test of the straight segment a -> b at the given
/// resolution (endpoints included).
bool edge_free(const Configuration& a, const Configuration& b, const CollisionChecker& checker,
               double resolution);

/// Bidirectional RRT in the box [lower, upper] followed by one greedy
/// shortcut pass. Throws PlanningFailedError after max_samples samples and
/// InvalidInputError when start or goal collide.
std::vector<Configuration> rrt_connect(const Configuration& start, const Configuration& goal,
                                       const Configuration& lower, const Configuration& upper,
                                       const CollisionChecker& checker, const RrtOptions& options = {});

/// Greedy pass: from each kept waypoint jump to the farthest later waypoint
/// reachable by a free edge.
std::vector<Configuration> shortcut(const std::vector<Configuration>& path, const CollisionChecker& checker,
                                    double resolution);

}  // namespace cssdf
