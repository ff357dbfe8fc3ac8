#pragma once

#include <string>
#include <vector>

#include "cssdf/common.hpp"

namespace cssdf {

struct Obstacle {
  enum class Shape { kSphere, kBox };

  Shape shape = Shape::kSphere;
  Point center = Point::Zero();
  /// Sphere/circle radius.
  double radius = 0.0;
  /// Box half extents.
  Point half_extents = Point::Zero();
  /// Constant velocity in m/s.
  Point velocity = Point::Zero();

  /// Euclidean distance from p to the primitive (0 inside).
  double distance(const Point& p, int dim) const;
  /// Signed distance: negative inside.
  double signed_distance(const Point& p, int dim) const;
  bool overlaps_sphere(const Point& c, double r, int dim) const {
    return signed_distance(c, dim) < r;
  }
};

/// Obstacle primitives with optional constant velocities plus an explicit
/// point list. Coordinates beyond `dim` are ignored.
class Scene {
 public:
  Scene() = default;
  Scene(int dim, std::vector<Obstacle> obstacles, std::vector<Point> points = {});

  int dim() const { return dim_; }
  const std::vector<Obstacle>& obstacles() const { return obstacles_; }
  const std::vector<Point>& points() const { return points_; }
  bool empty() const { return obstacles_.empty() && points_.empty(); }

  /// Scene advanced by t seconds along each obstacle's velocity.
  Scene at(double t) const;

  /// Surface samples of every primitive (about `spacing` m apart) plus the
  /// explicit points, as an obstacle point cloud.
  std::vector<Point> point_cloud(double spacing) const;

 private:
  int dim_ = 2;
  std::vector<Obstacle> obstacles_;
  std::vector<Point> points_;
};

/// JSON scene file, schema version 1.
Scene load_scene(const std::string& path);
Scene scene_from_json_text(const std::string& text);
std::string scene_to_json_text(const Scene& scene);

}  // namespace cssdf
