#include "cssdf/rrt_connect.hpp"

#include <cmath>
#include <random>

#include "cssdf/errors.hpp"

namespace cssdf {

bool edge_free(const Configuration& a, const Configuration& b, const CollisionChecker& checker,
               double resolution) {
  const double len = (b - a).norm();
  const int steps = std::max(1, static_cast<int>(std::ceil(len / resolution)));
  for (int i = 0; i <= steps; ++i) {
    const double s = static_cast<double>(i) / steps;
    if (checker(a + s * (b - a))) return false;
  }
  return true;
}

namespace {

struct Tree {
  std::vector<Configuration> nodes;
  std::vector<int> parent;

  int nearest(const Configuration& q) const {
    int best = 0;
    double bd = (nodes[0] - q).squaredNorm();
    for (int i = 1; i < static_cast<int>(nodes.size()); ++i) {
      const double d = (nodes[i] - q).squaredNorm();
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    return best;
  }

  int add(Configuration q, int from) {
    nodes.push_back(std::move(q));
    parent.push_back(from);
    return static_cast<int>(nodes.size()) - 1;
  }

  std::vector<Configuration> to_root(int i) const {
    std::vector<Configuration> out;
    for (; i >= 0; i = parent[i]) out.push_back(nodes[i]);
    return out;
  }
};

enum class Extend { kTrapped, kAdvanced, kReached };

Extend extend(Tree& tree, const Configuration& target, const CollisionChecker& checker,
              const RrtOptions& o, int& added) {
  const int near = tree.nearest(target);
  const Configuration& from = tree.nodes[near];
  const Eigen::VectorXd dir = target - from;
  const double dist = dir.norm();
  const bool reach = dist <= o.step;
  Configuration next = reach ? target : Configuration(from + dir * (o.step / dist));
  if (!edge_free(from, next, checker, o.edge_resolution)) return Extend::kTrapped;
  added = tree.add(std::move(next), near);
  return reach ? Extend::kReached : Extend::kAdvanced;
}

}  // namespace

std::vector<Configuration> shortcut(const std::vector<Configuration>& path, const CollisionChecker& checker,
                                    double resolution) {
  if (path.size() < 3) return path;
  std::vector<Configuration> out{path.front()};
  std::size_t i = 0;
  while (i + 1 < path.size()) {
    std::size_t j = path.size() - 1;
    while (j > i + 1 && !edge_free(path[i], path[j], checker, resolution)) --j;
    out.push_back(path[j]);
    i = j;
  }
  return out;
}

std::vector<Configuration> rrt_connect(const Configuration& start, const Configuration& goal,
                                       const Configuration& lower, const Configuration& upper,
                                       const CollisionChecker& checker, const RrtOptions& options) {
  if (checker(start) || checker(goal)) throw InvalidInputError("rrt_connect: start or goal in collision");
  if (edge_free(start, goal, checker, options.edge_resolution)) return {start, goal};

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Tree a, b;
  a.add(start, -1);
  b.add(goal, -1);
  bool a_is_start = true;
  for (std::size_t sample = 0; sample < options.max_samples; ++sample) {
    Configuration r(start.size());
    if (unit(rng) < options.goal_bias) {
      r = b.nodes.front();
    } else {
      for (int d = 0; d < r.size(); ++d) r[d] = lower[d] + (upper[d] - lower[d]) * unit(rng);
    }
    int new_a = -1;
    if (extend(a, r, checker, options, new_a) != Extend::kTrapped) {
      // Connect: keep extending b toward the new node.
      const Configuration target = a.nodes[new_a];
      Extend st = Extend::kAdvanced;
      int new_b = -1;
      while (st == Extend::kAdvanced) st = extend(b, target, checker, options, new_b);
      if (st == Extend::kReached) {
        std::vector<Configuration> pa = a.to_root(new_a);
        std::vector<Configuration> pb = b.to_root(new_b);
        std::reverse(pa.begin(), pa.end());
        pa.insert(pa.end(), pb.begin() + 1, pb.end());
        if (!a_is_start) std::reverse(pa.begin(), pa.end());
        return shortcut(pa, checker, options.edge_resolution);
      }
    }
    std::swap(a, b);
    a_is_start = !a_is_start;
  }
  throw PlanningFailedError("rrt_connect: no path within " + std::to_string(options.max_samples) + " samples");
}

}  // namespace cssdf
