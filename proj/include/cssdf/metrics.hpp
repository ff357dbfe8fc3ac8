#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cssdf/dataset.hpp"
#include "cssdf/field_net.hpp"

namespace cssdf {

/// False positives among band samples: predicted colliding (< 0) while the
/// truth is safe (> 0). Empty band -> nullopt.
struct FprResult {
  std::optional<double> percent;
  std::size_t band_count = 0;
  std::size_t false_positives = 0;
};
FprResult fpr(std::span<const double> predicted, std::span<const double> truth, double band = 0.05);

/// Mean cosine similarity; zero predicted gradients count as 0.
double grad_similarity(std::span<const Eigen::VectorXd> predicted, std::span<const Eigen::VectorXd> truth);

double mean_absolute_error(std::span<const double> predicted, std::span<const double> truth);

struct EvalReport {
  double mae = 0.0;
  double grad_similarity = 0.0;
  std::optional<double> fpr;
  std::size_t fpr_band_count = 0;
  double bsr = 0.0;
  double class_ratio = 0.0;
  std::size_t samples = 0;
  double band = 0.05;

  /// "key,value" lines; an undefined FPR is written as N/A.
  std::string to_text() const;
};

/// Model predictions against the values and gradients stored in `data`.
/// BSR and class ratio describe `data` itself.
EvalReport evaluate(const FieldModel& model, const Dataset& data, double band = 0.05);

/// Metrics of explicit predictions (for oracle-backed or external models).
EvalReport evaluate_predictions(const Dataset& data, std::span<const double> values,
                                std::span<const Eigen::VectorXd> grads, double band = 0.05);

}  // namespace cssdf
