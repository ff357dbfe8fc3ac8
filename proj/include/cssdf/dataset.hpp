#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cssdf/common.hpp"

namespace cssdf {

/// One training tuple. `grad` is the gradient of the signed value with
/// respect to q, so it points away from the boundary for safe samples and
/// toward it for colliding ones.
struct FieldSample {
  Configuration q;
  Point p = Point::Zero();
  double value = 0.0;
  std::uint8_t label = 0;  // 0 safe, 1 collision
  Eigen::VectorXd grad;
};

/// Sign/label agreement and unit gradient.
bool sample_is_consistent(const FieldSample& s, double grad_tol = 1e-6);

struct Dataset {
  int dof = 0;
  int point_dim = 0;
  std::vector<FieldSample> samples;

  std::size_t size() const { return samples.size(); }

  /// Little-endian "CSD1" binary file.
  void save(const std::string& path) const;
  static Dataset load(const std::string& path);
  void save_csv(const std::string& path) const;
};

/// Fraction (%) of samples with |value| <= band.
double boundary_sample_ratio(const Dataset& data, double band = 0.05);
/// Majority class fraction (%).
double class_ratio(const Dataset& data);

/// Draws `total` samples (0 = as many as both sources allow without
/// repetition) with a share `self_fraction` taken from `self_data` and the
/// rest from `external`. Sampling is without replacement and the result is
/// shuffled.
Dataset mix_datasets(const Dataset& self_data, const Dataset& external, double self_fraction,
                     std::size_t total, std::uint64_t seed);

}  // namespace cssdf
