#include "cssdf/scene.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cssdf/errors.hpp"

namespace cssdf {

namespace {

using nlohmann::json;

Point read_point(const json& j, int dim, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) < dim || j.size() > 3)
    throw SchemaError(std::string("scene: '") + what + "' must have " + std::to_string(dim) +
                      " coordinates");
  Point p = Point::Zero();
  for (std::size_t i = 0; i < j.size(); ++i) p[i] = j.at(i).get<double>();
  if (!p.allFinite()) throw SchemaError(std::string("scene: '") + what + "' not finite");
  return p;
}

json write_point(const Point& p, int dim) {
  json a = json::array();
  for (int i = 0; i < dim; ++i) a.push_back(p[i]);
  return a;
}

}  // namespace

double Obstacle::distance(const Point& p, int dim) const {
  return std::max(0.0, signed_distance(p, dim));
}

double Obstacle::signed_distance(const Point& p, int dim) const {
  if (shape == Shape::kSphere) return (p - center).head(dim).norm() - radius;
  Eigen::Vector3d d = ((p - center).cwiseAbs() - half_extents);
  double outside = 0.0;
  double inside = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < dim; ++i) {
    outside += std::pow(std::max(d[i], 0.0), 2);
    inside = std::max(inside, d[i]);
  }
  return std::sqrt(outside) + std::min(inside, 0.0);
}

Scene::Scene(int dim, std::vector<Obstacle> obstacles, std::vector<Point> points)
    : dim_(dim), obstacles_(std::move(obstacles)), points_(std::move(points)) {
  if (dim_ != 2 && dim_ != 3) throw InvalidInputError("scene dim must be 2 or 3");
  for (const auto& o : obstacles_) {
    if (o.shape == Obstacle::Shape::kSphere && !(o.radius > 0.0))
      throw InvalidInputError("scene: sphere radius must be > 0");
    if (o.shape == Obstacle::Shape::kBox && !(o.half_extents.head(dim_).minCoeff() > 0.0))
      throw InvalidInputError("scene: box extents must be > 0");
    if (!o.center.allFinite() || !o.velocity.allFinite())
      throw InvalidInputError("scene: obstacle center/velocity not finite");
  }
  for (const auto& p : points_)
    if (!p.allFinite()) throw InvalidInputError("scene: point not finite");
}

Scene Scene::at(double t) const {
  Scene s = *this;
  for (auto& o : s.obstacles_) o.center += o.velocity * t;
  return s;
}

std::vector<Point> Scene::point_cloud(double spacing) const {
  if (!(spacing > 0.0)) throw InvalidInputError("point cloud spacing must be > 0");
  std::vector<Point> cloud;
  for (const auto& o : obstacles_) {
    if (o.shape == Obstacle::Shape::kSphere) {
      if (dim_ == 2) {
        int n = std::max(8, static_cast<int>(std::ceil(2 * kPi * o.radius / spacing)));
        for (int k = 0; k < n; ++k) {
          double a = 2 * kPi * k / n;
          cloud.push_back(o.center + o.radius * Point(std::cos(a), std::sin(a), 0.0));
        }
      } else {
        // Fibonacci sphere.
        int n = std::max(16, static_cast<int>(std::ceil(4 * kPi * o.radius * o.radius / (spacing * spacing))));
        const double golden = kPi * (3.0 - std::sqrt(5.0));
        for (int k = 0; k < n; ++k) {
          double z = 1.0 - 2.0 * (k + 0.5) / n;
          double r = std::sqrt(1.0 - z * z);
          double a = golden * k;
          cloud.push_back(o.center + o.radius * Point(r * std::cos(a), r * std::sin(a), z));
        }
      }
    } else {
      // Box surface: grid samples on each face (edges for planar boxes).
      const Point& h = o.half_extents;
      if (dim_ == 2) {
        int nx = std::max(1, static_cast<int>(std::ceil(2 * h[0] / spacing)));
        int ny = std::max(1, static_cast<int>(std::ceil(2 * h[1] / spacing)));
        for (int i = 0; i <= nx; ++i) {
          double x = -h[0] + 2 * h[0] * i / nx;
          cloud.push_back(o.center + Point(x, -h[1], 0));
          cloud.push_back(o.center + Point(x, h[1], 0));
        }
        for (int j = 1; j < ny; ++j) {
          double y = -h[1] + 2 * h[1] * j / ny;
          cloud.push_back(o.center + Point(-h[0], y, 0));
          cloud.push_back(o.center + Point(h[0], y, 0));
        }
      } else {
        for (int axis = 0; axis < 3; ++axis) {
          int u = (axis + 1) % 3, v = (axis + 2) % 3;
          int nu = std::max(1, static_cast<int>(std::ceil(2 * h[u] / spacing)));
          int nv = std::max(1, static_cast<int>(std::ceil(2 * h[v] / spacing)));
          for (int side = -1; side <= 1; side += 2)
            for (int i = 0; i <= nu; ++i)
              for (int j = 0; j <= nv; ++j) {
                Point p = o.center;
                p[axis] += side * h[axis];
                p[u] += -h[u] + 2 * h[u] * i / nu;
                p[v] += -h[v] + 2 * h[v] * j / nv;
                cloud.push_back(p);
              }
        }
      }
    }
  }
  cloud.insert(cloud.end(), points_.begin(), points_.end());
  return cloud;
}

Scene scene_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("scene: malformed JSON: ") + e.what());
  }
  try {
    if (!doc.contains("version")) throw SchemaError("scene: missing 'version'");
    int version = doc.at("version").get<int>();
    if (version != 1) throw VersionMismatchError("scene: unsupported schema version " + std::to_string(version));
    int dim = doc.value("dim", 2);
    std::vector<Obstacle> obstacles;
    if (doc.contains("obstacles")) {
      for (const auto& oj : doc.at("obstacles")) {
        Obstacle o;
        std::string type = oj.at("type").get<std::string>();
        o.center = read_point(oj.at("center"), dim, "center");
        if (oj.contains("velocity")) o.velocity = read_point(oj.at("velocity"), dim, "velocity");
        if (type == "sphere" || type == "circle") {
          o.shape = Obstacle::Shape::kSphere;
          o.radius = oj.at("radius").get<double>();
        } else if (type == "box") {
          o.shape = Obstacle::Shape::kBox;
          o.half_extents = 0.5 * read_point(oj.at("extents"), dim, "extents");
        } else {
          throw SchemaError("scene: unknown obstacle type '" + type + "'");
        }
        obstacles.push_back(o);
      }
    }
    std::vector<Point> points;
    if (doc.contains("points"))
      for (const auto& pj : doc.at("points")) points.push_back(read_point(pj, dim, "points[]"));
    return Scene(dim, std::move(obstacles), std::move(points));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("scene: ") + e.what());
  }
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scene_from_json_text(ss.str());
}

std::string scene_to_json_text(const Scene& scene) {
  json doc;
  doc["version"] = 1;
  doc["dim"] = scene.dim();
  json obs = json::array();
  for (const auto& o : scene.obstacles()) {
    json oj;
    oj["center"] = write_point(o.center, scene.dim());
    oj["velocity"] = write_point(o.velocity, scene.dim());
    if (o.shape == Obstacle::Shape::kSphere) {
      oj["type"] = "sphere";
      oj["radius"] = o.radius;
    } else {
      oj["type"] = "box";
      oj["extents"] = write_point(2.0 * o.half_extents, scene.dim());
    }
    obs.push_back(oj);
  }
  doc["obstacles"] = obs;
  json pts = json::array();
  for (const auto& p : scene.points()) pts.push_back(write_point(p, scene.dim()));
  doc["points"] = pts;
  return doc.dump(2);
}

}  // namespace cssdf
