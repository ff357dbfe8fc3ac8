#include "cssdf/robot_model.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "cssdf/errors.hpp"

namespace cssdf {

namespace {

using nlohmann::json;

constexpr int kRobotSchemaVersion = 1;

Eigen::Vector3d read_vec(const json& j, const char* what) {
  if (!j.is_array() || j.size() < 2 || j.size() > 3)
    throw SchemaError(std::string("robot: '") + what + "' must be an array of 2 or 3 numbers");
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

json write_vec(const Eigen::Vector3d& v, int dim) {
  json a = json::array();
  for (int i = 0; i < dim; ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

std::vector<Sphere> capsule_spheres(const Eigen::Vector3d& direction, double length,
                                    double radius, int count) {
  if (count < 1) throw InvalidInputError("capsule sphere count must be >= 1");
  if (!(length > 0.0) || !(radius > 0.0))
    throw InvalidInputError("capsule length and radius must be positive");
  Eigen::Vector3d dir = direction.normalized();
  std::vector<Sphere> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    double t = count == 1 ? 0.5 : static_cast<double>(k) / (count - 1);
    out.push_back({dir * (t * length), radius});
  }
  return out;
}

RobotModel::RobotModel(std::string name, int point_dim, std::vector<Joint> joints,
                       std::vector<LinkGeometry> links, Eigen::Isometry3d base_pose)
    : name_(std::move(name)),
      point_dim_(point_dim),
      joints_(std::move(joints)),
      links_(std::move(links)),
      base_pose_(base_pose) {
  validate_and_index();
}

void RobotModel::validate_and_index() {
  if (joints_.empty()) throw InvalidInputError("robot must have dof >= 1");
  if (point_dim_ != 2 && point_dim_ != 3)
    throw InvalidInputError("robot point_dim must be 2 or 3");
  for (std::size_t j = 0; j < joints_.size(); ++j) {
    const auto& jt = joints_[j];
    if (!(jt.lower < jt.upper))
      throw InvalidInputError("joint " + std::to_string(j) + ": lower limit must be below upper");
    if (!(jt.axis.norm() > 0.0) || !jt.axis.allFinite() || !jt.offset.allFinite())
      throw InvalidInputError("joint " + std::to_string(j) + ": invalid axis or offset");
    joints_[j].axis.normalize();
  }
  if (links_.empty()) throw InvalidInputError("robot must have at least one link");

  // Cumulative offset length from the base to each joint origin.
  std::vector<double> path(joints_.size(), 0.0);
  double acc = 0.0;
  for (std::size_t j = 0; j < joints_.size(); ++j) {
    acc += joints_[j].offset.norm();
    path[j] = acc;
  }

  sphere_link_.clear();
  reach_ = 0.0;
  max_radius_ = 0.0;
  min_radius_ = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < links_.size(); ++l) {
    const auto& link = links_[l];
    if (link.parent_joint < -1 || link.parent_joint >= dof())
      throw InvalidInputError("link " + std::to_string(l) + ": parent_joint out of range");
    if (link.local_spheres.empty())
      throw InvalidInputError("link " + std::to_string(l) + ": needs at least one sphere");
    for (const auto& s : link.local_spheres) {
      if (!(s.radius > 0.0) || !std::isfinite(s.radius))
        throw InvalidInputError("link " + std::to_string(l) + ": sphere radius must be > 0");
      if (!s.center.allFinite())
        throw InvalidInputError("link " + std::to_string(l) + ": sphere center not finite");
      double base = link.parent_joint < 0 ? 0.0 : path[link.parent_joint];
      reach_ = std::max(reach_, base + s.center.norm());
      max_radius_ = std::max(max_radius_, s.radius);
      min_radius_ = std::min(min_radius_, s.radius);
      sphere_link_.push_back(static_cast<int>(l));
    }
  }

  self_pairs_.clear();
  const int ns = sphere_count();
  for (int a = 0; a < ns; ++a) {
    for (int b = a + 1; b < ns; ++b) {
      int ja = links_[sphere_link_[a]].parent_joint;
      int jb = links_[sphere_link_[b]].parent_joint;
      if (std::abs(ja - jb) > 1) self_pairs_.emplace_back(a, b);
    }
  }
}

Configuration RobotModel::lower_limits() const {
  Configuration v(dof());
  for (int j = 0; j < dof(); ++j) v[j] = joints_[j].lower;
  return v;
}

Configuration RobotModel::upper_limits() const {
  Configuration v(dof());
  for (int j = 0; j < dof(); ++j) v[j] = joints_[j].upper;
  return v;
}

Configuration RobotModel::extended_lower() const {
  return lower_limits().cwiseMin(-kPi);
}

Configuration RobotModel::extended_upper() const {
  return upper_limits().cwiseMax(kPi);
}

void RobotModel::check_configuration(const Configuration& q) const {
  if (q.size() != dof())
    throw InvalidInputError("configuration has " + std::to_string(q.size()) +
                            " entries, robot has dof " + std::to_string(dof()));
  if (!q.allFinite()) throw InvalidInputError("configuration is not finite");
}

std::vector<Eigen::Isometry3d> RobotModel::joint_frames(const Configuration& q) const {
  check_configuration(q);
  std::vector<Eigen::Isometry3d> frames;
  frames.reserve(joints_.size());
  Eigen::Isometry3d t = base_pose_;
  for (int j = 0; j < dof(); ++j) {
    t = t * Eigen::Translation3d(joints_[j].offset) * Eigen::AngleAxisd(q[j], joints_[j].axis);
    frames.push_back(t);
  }
  return frames;
}

std::vector<WorldSphere> RobotModel::forward_spheres(const Configuration& q) const {
  auto frames = joint_frames(q);
  std::vector<WorldSphere> out;
  out.reserve(sphere_link_.size());
  for (std::size_t l = 0; l < links_.size(); ++l) {
    const auto& link = links_[l];
    const Eigen::Isometry3d& f = link.parent_joint < 0 ? base_pose_ : frames[link.parent_joint];
    for (const auto& s : link.local_spheres)
      out.push_back({f * s.center, s.radius, static_cast<int>(l)});
  }
  return out;
}

Aabb RobotModel::workspace_bounds(double extension) const {
  if (!(extension >= 1.0)) throw InvalidInputError("workspace extension must be >= 1");
  const double half = extension * total_reach();
  Aabb box;
  box.min = base_position() - Point::Constant(half);
  box.max = base_position() + Point::Constant(half);
  return box;
}

bool RobotModel::within_limits(const Configuration& q) const {
  for (int j = 0; j < dof(); ++j) {
    if (joints_[j].continuous) continue;
    if (q[j] < joints_[j].lower || q[j] > joints_[j].upper) return false;
  }
  return true;
}

double RobotModel::limit_distance(const Configuration& q, Configuration* grad) const {
  double inside = std::numeric_limits<double>::infinity();
  int arg = -1;
  double arg_sign = 0.0;
  Eigen::VectorXd excess = Eigen::VectorXd::Zero(dof());
  bool outside = false;
  for (int j = 0; j < dof(); ++j) {
    if (joints_[j].continuous) continue;
    double lo = q[j] - joints_[j].lower;
    double hi = joints_[j].upper - q[j];
    if (lo < 0.0) {
      excess[j] = lo;
      outside = true;
    } else if (hi < 0.0) {
      excess[j] = -hi;
      outside = true;
    }
    if (lo < inside) {
      inside = lo;
      arg = j;
      arg_sign = 1.0;
    }
    if (hi < inside) {
      inside = hi;
      arg = j;
      arg_sign = -1.0;
    }
  }
  if (grad) grad->setZero(dof());
  if (arg < 0) return std::numeric_limits<double>::infinity();
  if (outside) {
    double n = excess.norm();
    if (grad) *grad = -excess / n;
    return -n;
  }
  if (grad) (*grad)[arg] = arg_sign;
  return inside;
}

RobotModel robot_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("robot: malformed JSON: ") + e.what());
  }
  try {
    if (!doc.contains("version")) throw SchemaError("robot: missing 'version'");
    int version = doc.at("version").get<int>();
    if (version != kRobotSchemaVersion)
      throw VersionMismatchError("robot: unsupported schema version " + std::to_string(version));
    std::string name = doc.value("name", "robot");
    int point_dim = doc.at("point_dim").get<int>();

    Eigen::Isometry3d base = Eigen::Isometry3d::Identity();
    if (doc.contains("base")) {
      const auto& b = doc.at("base");
      if (b.contains("position")) base.translation() = read_vec(b.at("position"), "base.position");
      if (b.contains("rpy")) {
        Eigen::Vector3d rpy = read_vec(b.at("rpy"), "base.rpy");
        base.linear() = (Eigen::AngleAxisd(rpy[2], Eigen::Vector3d::UnitZ()) *
                         Eigen::AngleAxisd(rpy[1], Eigen::Vector3d::UnitY()) *
                         Eigen::AngleAxisd(rpy[0], Eigen::Vector3d::UnitX()))
                            .toRotationMatrix();
      }
    }

    std::vector<Joint> joints;
    for (const auto& jj : doc.at("joints")) {
      Joint jt;
      if (jj.contains("axis")) jt.axis = read_vec(jj.at("axis"), "joint.axis");
      if (jj.contains("offset")) jt.offset = read_vec(jj.at("offset"), "joint.offset");
      const auto& lim = jj.at("limits");
      if (!lim.is_array() || lim.size() != 2) throw SchemaError("robot: joint.limits must be [lo, hi]");
      jt.lower = lim.at(0).get<double>();
      jt.upper = lim.at(1).get<double>();
      jt.continuous = jj.value("continuous", false);
      joints.push_back(jt);
    }

    std::vector<LinkGeometry> links;
    for (const auto& lj : doc.at("links")) {
      LinkGeometry link;
      link.parent_joint = lj.at("parent_joint").get<int>();
      if (lj.contains("spheres")) {
        for (const auto& sj : lj.at("spheres"))
          link.local_spheres.push_back({read_vec(sj.at("center"), "sphere.center"),
                                        sj.at("radius").get<double>()});
      }
      if (lj.contains("capsule")) {
        const auto& c = lj.at("capsule");
        Eigen::Vector3d dir = c.contains("direction") ? read_vec(c.at("direction"), "capsule.direction")
                                                      : Eigen::Vector3d::UnitX();
        auto caps = capsule_spheres(dir, c.at("length").get<double>(), c.at("radius").get<double>(),
                                    c.value("count", 5));
        link.local_spheres.insert(link.local_spheres.end(), caps.begin(), caps.end());
      }
      links.push_back(std::move(link));
    }
    return RobotModel(name, point_dim, std::move(joints), std::move(links), base);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("robot: ") + e.what());
  }
}

RobotModel load_robot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open robot file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return robot_from_json_text(ss.str());
}

std::string robot_to_json_text(const RobotModel& model) {
  json doc;
  doc["version"] = kRobotSchemaVersion;
  doc["name"] = model.name();
  doc["point_dim"] = model.point_dim();
  Eigen::Vector3d rpy = model.base_pose().linear().eulerAngles(2, 1, 0).reverse();
  doc["base"] = {{"position", write_vec(model.base_position(), 3)}, {"rpy", write_vec(rpy, 3)}};
  json joints = json::array();
  for (const auto& j : model.joints())
    joints.push_back({{"axis", write_vec(j.axis, 3)},
                      {"offset", write_vec(j.offset, 3)},
                      {"limits", {j.lower, j.upper}},
                      {"continuous", j.continuous}});
  doc["joints"] = joints;
  json links = json::array();
  for (const auto& l : model.links()) {
    json spheres = json::array();
    for (const auto& s : l.local_spheres)
      spheres.push_back({{"center", write_vec(s.center, 3)}, {"radius", s.radius}});
    links.push_back({{"parent_joint", l.parent_joint}, {"spheres", spheres}});
  }
  doc["links"] = links;
  return doc.dump(2);
}

RobotModel make_planar_arm(const std::vector<double>& lengths, double radius,
                           int spheres_per_link, bool continuous) {
  std::vector<Joint> joints;
  std::vector<LinkGeometry> links;
  double prev = 0.0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    Joint j;
    j.axis = Eigen::Vector3d::UnitZ();
    j.offset = Eigen::Vector3d(prev, 0.0, 0.0);
    j.lower = -kPi;
    j.upper = kPi;
    j.continuous = continuous;
    joints.push_back(j);
    LinkGeometry link;
    link.parent_joint = static_cast<int>(i);
    link.local_spheres = capsule_spheres(Eigen::Vector3d::UnitX(), lengths[i], radius, spheres_per_link);
    links.push_back(std::move(link));
    prev = lengths[i];
  }
  return RobotModel("planar" + std::to_string(lengths.size()), 2, std::move(joints), std::move(links));
}

}  // namespace cssdf
