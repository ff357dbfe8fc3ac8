#include "cssdf/geometry_oracle.hpp"

#include <algorithm>

#include "cssdf/errors.hpp"

namespace cssdf {

bool link_self_collision(const RobotModel& model, const Configuration& q) {
  const auto spheres = model.forward_spheres(q);
  for (const auto& [a, b] : model.self_pairs()) {
    const double rr = spheres[a].radius + spheres[b].radius;
    if ((spheres[a].center - spheres[b].center).squaredNorm() < rr * rr) return true;
  }
  return false;
}

bool is_self_collision(const RobotModel& model, const Configuration& q) {
  model.check_configuration(q);
  if (!model.within_limits(q)) return true;
  return link_self_collision(model, q);
}

bool collides_with_point(const RobotModel& model, const Configuration& q, const Point& p) {
  const int dim = model.point_dim();
  for (const auto& s : model.forward_spheres(q))
    if ((p - s.center).head(dim).squaredNorm() <= s.radius * s.radius) return true;
  return false;
}

bool collides_with_scene(const RobotModel& model, const Scene& scene, const Configuration& q) {
  const int dim = model.point_dim();
  const auto spheres = model.forward_spheres(q);
  for (const auto& s : spheres) {
    for (const auto& o : scene.obstacles())
      if (o.overlaps_sphere(s.center, s.radius, dim)) return true;
    for (const auto& p : scene.points())
      if ((p - s.center).head(dim).squaredNorm() <= s.radius * s.radius) return true;
  }
  return false;
}

bool in_collision(const RobotModel& model, const Scene& scene, const Configuration& q) {
  return is_self_collision(model, q) || collides_with_scene(model, scene, q);
}

double compose_distance(double d_self, double d_point) {
  if (d_self < 0.0 && d_point < 0.0) return std::max(d_self, d_point);
  return std::min(d_self, d_point);
}

double aggregate_points(std::span<const double> values, std::size_t* arg) {
  if (values.empty()) throw InvalidInputError("aggregate_points: empty value list");
  const bool all_negative =
      std::all_of(values.begin(), values.end(), [](double v) { return v < 0.0; });
  auto it = all_negative ? std::max_element(values.begin(), values.end())
                         : std::min_element(values.begin(), values.end());
  if (arg) *arg = static_cast<std::size_t>(it - values.begin());
  return *it;
}

Configuration project_to_boundary(const Configuration& q, double d, const Eigen::VectorXd& grad) {
  if (grad.size() != q.size()) throw InvalidInputError("project_to_boundary: dimension mismatch");
  const double n = grad.norm();
  if (!(n > 1e-12)) throw DegenerateGradientError("project_to_boundary: zero gradient");
  return q - d * (grad / n);
}

}  // namespace cssdf
