#pragma once

#include <Eigen/Geometry>

#include <string>
#include <vector>

#include "cssdf/common.hpp"

namespace cssdf {

struct Sphere {
  Point center = Point::Zero();
  double radius = 0.0;
};

/// World-frame sphere produced by forward kinematics.
struct WorldSphere {
  Point center;
  double radius;
  int link;
};

/// Revolute joint: frame_j = frame_{j-1} * Translate(offset) * Rot(axis, q_j).
struct Joint {
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  double lower = -kPi;
  double upper = kPi;
  /// Continuous joints wrap freely; their interval only bounds sampling and
  /// normalization and never counts as a limit violation.
  bool continuous = false;
};

struct LinkGeometry {
  /// Joint whose frame carries this link; -1 attaches the link to the base.
  int parent_joint = -1;
  std::vector<Sphere> local_spheres;
};

/// Axis-aligned box. For planar robots only x and y are meaningful.
struct Aabb {
  Point min = Point::Zero();
  Point max = Point::Zero();

  bool contains(const Point& p, int dim) const {
    for (int i = 0; i < dim; ++i)
      if (p[i] < min[i] || p[i] > max[i]) return false;
    return true;
  }
  Point center() const { return 0.5 * (min + max); }
};

/// Evenly spaced spheres along a segment from the link origin, both ends
/// included (a single sphere sits at the midpoint).
std::vector<Sphere> capsule_spheres(const Eigen::Vector3d& direction, double length,
                                    double radius, int count = 5);

class RobotModel {
 public:
  RobotModel() = default;
  RobotModel(std::string name, int point_dim, std::vector<Joint> joints,
             std::vector<LinkGeometry> links,
             Eigen::Isometry3d base_pose = Eigen::Isometry3d::Identity());

  const std::string& name() const { return name_; }
  int dof() const { return static_cast<int>(joints_.size()); }
  int point_dim() const { return point_dim_; }
  const std::vector<Joint>& joints() const { return joints_; }
  const std::vector<LinkGeometry>& links() const { return links_; }
  const Eigen::Isometry3d& base_pose() const { return base_pose_; }
  Point base_position() const { return base_pose_.translation(); }

  Configuration lower_limits() const;
  Configuration upper_limits() const;
  /// [min(-pi, q_min), max(pi, q_max)] per joint.
  Configuration extended_lower() const;
  Configuration extended_upper() const;

  /// Frames of joints 0..n-1 after applying q.
  std::vector<Eigen::Isometry3d> joint_frames(const Configuration& q) const;
  std::vector<WorldSphere> forward_spheres(const Configuration& q) const;

  int sphere_count() const { return static_cast<int>(sphere_link_.size()); }
  /// Sphere pairs checked for self-collision (links whose parent joints
  /// differ by more than one).
  const std::vector<std::pair<int, int>>& self_pairs() const { return self_pairs_; }

  double max_radius() const { return max_radius_; }
  double min_radius() const { return min_radius_; }
  /// Largest distance from the base a sphere center can reach plus the
  /// largest radius. Points beyond it can never touch the robot.
  double total_reach() const { return reach_ + max_radius_; }

  /// Reachable box scaled by `extension` about the base.
  Aabb workspace_bounds(double extension = 1.5) const;

  bool within_limits(const Configuration& q) const;
  /// Signed distance to the limit box over non-continuous joints: positive
  /// inside, negative outside. +inf when every joint is continuous.
  double limit_distance(const Configuration& q, Configuration* grad = nullptr) const;

  void check_configuration(const Configuration& q) const;

 private:
  void validate_and_index();

  std::string name_;
  int point_dim_ = 3;
  std::vector<Joint> joints_;
  std::vector<LinkGeometry> links_;
  Eigen::Isometry3d base_pose_ = Eigen::Isometry3d::Identity();

  std::vector<int> sphere_link_;
  std::vector<std::pair<int, int>> self_pairs_;
  double reach_ = 0.0;
  double max_radius_ = 0.0;
  double min_radius_ = 0.0;
};

/// JSON robot description, schema version 1.
RobotModel load_robot(const std::string& path);
RobotModel robot_from_json_text(const std::string& text);
std::string robot_to_json_text(const RobotModel& model);

/// Planar serial arm in the xy plane with capsule links along +x.
RobotModel make_planar_arm(const std::vector<double>& lengths, double radius = 0.1,
                           int spheres_per_link = 5, bool continuous = false);

}  // namespace cssdf
