#include "cssdf/config_field.hpp"

#include <algorithm>
#include <numeric>

#include "cssdf/errors.hpp"
#include "cssdf/geometry_oracle.hpp"

namespace cssdf {

std::vector<FieldValue> ConfigField::query_rows(const Configuration& q, int /*k*/) const { return {query(q)}; }

FieldValue GridField::query(const Configuration& q) const {
  FieldValue out;
  out.value = grid_.interpolate(q, &out.grad);
  return out;
}

OracleSceneField::OracleSceneField(const RobotModel& model, GridSpec spec, int workers)
    : model_(&model), spec_(std::move(spec)), workers_(workers) {
  self_labels_ = classify_cells(
      spec_, [&model](const Configuration& q) { return is_self_collision(model, q); }, workers_);
  grid_ = oracle_scene_distance(model, Scene(model.point_dim(), {}), spec_, workers_, &self_labels_);
}

void OracleSceneField::update(const Scene& scene) {
  grid_ = oracle_scene_distance(*model_, scene, spec_, workers_, &self_labels_);
}

FieldValue OracleSceneField::query(const Configuration& q) const {
  FieldValue out;
  out.value = grid_.interpolate(q, &out.grad);
  return out;
}

NetSceneField::NetSceneField(const FieldModel& model, std::vector<Point> points)
    : model_(&model), points_(std::move(points)) {}

void NetSceneField::evaluate(const Configuration& q, Eigen::VectorXd& values, Eigen::MatrixXd& grads) const {
  const auto k = static_cast<Eigen::Index>(points_.size());
  Eigen::MatrixXd qs = q.replicate(1, k);
  Eigen::MatrixXd ps(3, k);
  for (Eigen::Index i = 0; i < k; ++i) ps.col(i) = points_[i];
  model_->predict_with_grad(qs, ps, values, grads);
}

FieldValue NetSceneField::query(const Configuration& q) const {
  if (points_.empty()) throw InvalidInputError("net field: empty point cloud");
  Eigen::VectorXd values;
  Eigen::MatrixXd grads;
  evaluate(q, values, grads);
  std::size_t arg = 0;
  FieldValue out;
  out.value = aggregate_points(std::span<const double>(values.data(), values.size()), &arg);
  out.grad = grads.col(static_cast<Eigen::Index>(arg));
  return out;
}

std::vector<FieldValue> NetSceneField::query_rows(const Configuration& q, int k) const {
  if (points_.empty() || k < 1) return {};
  Eigen::VectorXd values;
  Eigen::MatrixXd grads;
  evaluate(q, values, grads);
  std::vector<Eigen::Index> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  const auto kk = std::min<std::size_t>(k, order.size());
  std::partial_sort(order.begin(), order.begin() + kk, order.end(),
                    [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b] || (values[a] == values[b] && a < b); });
  std::vector<FieldValue> rows;
  for (std::size_t i = 0; i < kk; ++i) rows.push_back({values[order[i]], grads.col(order[i])});
  return rows;
}

}  // namespace cssdf
