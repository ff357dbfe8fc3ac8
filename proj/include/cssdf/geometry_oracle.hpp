#pragma once

#include <span>
#include <vector>

#include "cssdf/robot_model.hpp"
#include "cssdf/scene.hpp"

namespace cssdf {

/// Link-to-link overlap between spheres of non-adjacent links, ignoring
/// joint limits.
bool link_self_collision(const RobotModel& model, const Configuration& q);

/// Binary self-collision checker: link-to-link overlap or a joint-limit
/// violation.
bool is_self_collision(const RobotModel& model, const Configuration& q);

/// True iff p lies inside (or on) any world-frame collision sphere.
bool collides_with_point(const RobotModel& model, const Configuration& q, const Point& p);

/// Robot spheres against every obstacle primitive and explicit point.
bool collides_with_scene(const RobotModel& model, const Scene& scene, const Configuration& q);

/// Self-collision or scene collision.
bool in_collision(const RobotModel& model, const Scene& scene, const Configuration& q);

/// Composite rule for one point: max when both negative, otherwise min.
double compose_distance(double d_self, double d_point);

/// Multi-point aggregation: max when every value is negative, else min.
/// When `arg` is given it receives the index of the selected value.
double aggregate_points(std::span<const double> values, std::size_t* arg = nullptr);

/// Moves q to the zero level set along the (renormalized) gradient.
Configuration project_to_boundary(const Configuration& q, double d, const Eigen::VectorXd& grad);

}  // namespace cssdf
