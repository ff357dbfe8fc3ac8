#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "cssdf/cspace_grid.hpp"
#include "cssdf/field_net.hpp"
#include "cssdf/scene.hpp"

namespace cssdf {

struct FieldValue {
  double value = 0.0;
  Eigen::VectorXd grad;
};

/// Signed C-space distance phi(q) with gradient, as consumed by the planner
/// and the controller.
class ConfigField {
 public:
  virtual ~ConfigField() = default;
  virtual int dof() const = 0;
  virtual FieldValue query(const Configuration& q) const = 0;
  /// Up to k candidate constraint rows, smallest value first. Fields without
  /// per-point structure return the aggregate only; an empty result means
  /// there is nothing to avoid.
  virtual std::vector<FieldValue> query_rows(const Configuration& q, int k) const;
};

/// Multilinear interpolation of a distance grid.
class GridField final : public ConfigField {
 public:
  explicit GridField(CSpaceGrid grid) : grid_(std::move(grid)) {}
  int dof() const override { return grid_.spec().dims(); }
  FieldValue query(const Configuration& q) const override;
  const CSpaceGrid& grid() const { return grid_; }

 private:
  CSpaceGrid grid_;
};

/// Exact-oracle field for a (possibly moving) scene: the self-collision
/// labels are computed once and the scene grid is rebuilt on update().
class OracleSceneField final : public ConfigField {
 public:
  OracleSceneField(const RobotModel& model, GridSpec spec, int workers = 1);
  void update(const Scene& scene);
  int dof() const override { return static_cast<int>(spec_.counts.size()); }
  FieldValue query(const Configuration& q) const override;
  const CSpaceGrid& grid() const { return grid_; }

 private:
  const RobotModel* model_;
  GridSpec spec_;
  int workers_;
  std::vector<std::uint8_t> self_labels_;
  CSpaceGrid grid_;
};

/// Learned field over an obstacle point cloud: per-point predictions are
/// combined with the multi-point aggregation rule.
class NetSceneField final : public ConfigField {
 public:
  NetSceneField(const FieldModel& model, std::vector<Point> points);
  void set_points(std::vector<Point> points) { points_ = std::move(points); }
  const std::vector<Point>& points() const { return points_; }
  int dof() const override { return model_->config().dof; }
  FieldValue query(const Configuration& q) const override;
  std::vector<FieldValue> query_rows(const Configuration& q, int k) const override;

 private:
  void evaluate(const Configuration& q, Eigen::VectorXd& values, Eigen::MatrixXd& grads) const;
  const FieldModel* model_;
  std::vector<Point> points_;
};

/// Wraps a callable; used for analytic fields.
class LambdaField final : public ConfigField {
 public:
  LambdaField(int dof, std::function<FieldValue(const Configuration&)> fn) : dof_(dof), fn_(std::move(fn)) {}
  int dof() const override { return dof_; }
  FieldValue query(const Configuration& q) const override { return fn_(q); }

 private:
  int dof_;
  std::function<FieldValue(const Configuration&)> fn_;
};

}  // namespace cssdf
