#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cssdf/robot_model.hpp"
#include "cssdf/scene.hpp"

namespace cssdf {

/// Regular grid over a joint box. Cell centers sit at lower + (i + 1/2) h.
struct GridSpec {
  std::vector<int> counts;
  Configuration lower;
  Configuration upper;

  int dims() const { return static_cast<int>(counts.size()); }
  std::size_t cell_count() const;
  double cell_size(int axis) const { return (upper[axis] - lower[axis]) / counts[axis]; }
  double max_cell_size() const;
  /// Diagonal of the bounded configuration box.
  double diameter() const { return (upper - lower).norm(); }

  /// Row-major (last axis fastest) flat index.
  std::size_t flat_index(const std::vector<int>& idx) const;
  std::vector<int> multi_index(std::size_t flat) const;
  Configuration cell_center(std::size_t flat) const;
};

/// Grid over the model's extended joint box with `cells` cells per axis.
GridSpec default_grid_spec(const RobotModel& model, int cells);

/// Signed C-space distance sampled at cell centers.
class CSpaceGrid {
 public:
  CSpaceGrid() = default;
  CSpaceGrid(GridSpec spec, std::vector<double> values, std::vector<std::int64_t> nearest,
             bool degenerate);

  const GridSpec& spec() const { return spec_; }
  const std::vector<double>& values() const { return values_; }
  /// Flat index of the nearest opposite-class cell, -1 when none exists.
  const std::vector<std::int64_t>& nearest() const { return nearest_; }
  /// True when every cell had the same class.
  bool degenerate() const { return degenerate_; }

  double value(std::size_t flat) const { return values_[flat]; }

  /// Multilinear interpolation between cell centers (clamped to the center
  /// range). `grad` receives the derivative of the interpolant.
  double interpolate(const Configuration& q, Eigen::VectorXd* grad = nullptr) const;

  /// Central finite-difference gradient at an interior cell; false at the
  /// border.
  bool finite_difference_gradient(std::size_t flat, Eigen::VectorXd& grad) const;

  /// Binary "CSG1" file with the spec and the values. Nearest-site indices
  /// are not stored.
  void save(const std::string& path) const;
  static CSpaceGrid load(const std::string& path);

 private:
  GridSpec spec_;
  std::vector<double> values_;
  std::vector<std::int64_t> nearest_;
  bool degenerate_ = false;
};

/// Exact signed distance between cell centers for a binary labelling:
/// positive cells get the distance to the nearest colliding center, colliding
/// cells minus the distance to the nearest safe center. Uses a separable
/// squared Euclidean distance transform with nearest-site tracking. If only
/// one class is present every cell gets +/- the box diameter.
CSpaceGrid signed_distance_grid(const GridSpec& spec, const std::vector<std::uint8_t>& colliding);

/// Labels every cell center with `classifier` (true = colliding).
std::vector<std::uint8_t> classify_cells(const GridSpec& spec,
                                         const std::function<bool(const Configuration&)>& classifier,
                                         int workers = 1);

/// Self-collision distance: link-pair field merged with the joint-limit
/// distance by min.
CSpaceGrid oracle_self_distance(const RobotModel& model, const GridSpec& spec, int workers = 1);

/// Distance to the set of configurations that collide with p. Unreachable
/// points yield the clamped box diameter everywhere.
CSpaceGrid oracle_point_distance(const RobotModel& model, const GridSpec& spec, const Point& p,
                                 int workers = 1);

/// Distance to the union of self-collision and scene collision. Passing a
/// precomputed self-collision labelling skips that part of the work.
CSpaceGrid oracle_scene_distance(const RobotModel& model, const Scene& scene, const GridSpec& spec,
                                 int workers = 1,
                                 const std::vector<std::uint8_t>* self_labels = nullptr);

}  // namespace cssdf
