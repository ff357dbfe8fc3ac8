#include "cssdf/metrics.hpp"

#include <cmath>
#include <sstream>

#include "cssdf/errors.hpp"

namespace cssdf {

FprResult fpr(std::span<const double> predicted, std::span<const double> truth, double band) {
  if (predicted.size() != truth.size()) throw InvalidInputError("fpr: size mismatch");
  FprResult r;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (std::abs(truth[i]) > band) continue;
    ++r.band_count;
    if (predicted[i] < 0.0 && truth[i] > 0.0) ++r.false_positives;
  }
  if (r.band_count > 0)
    r.percent = 100.0 * static_cast<double>(r.false_positives) / static_cast<double>(r.band_count);
  return r;
}

double grad_similarity(std::span<const Eigen::VectorXd> predicted, std::span<const Eigen::VectorXd> truth) {
  if (predicted.size() != truth.size()) throw InvalidInputError("grad_similarity: size mismatch");
  if (truth.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double np = predicted[i].norm();
    const double nt = truth[i].norm();
    if (!(nt > 0.0)) throw InvalidInputError("grad_similarity: zero reference gradient");
    if (np > 0.0) sum += predicted[i].dot(truth[i]) / (np * nt);
  }
  return sum / static_cast<double>(truth.size());
}

double mean_absolute_error(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size()) throw InvalidInputError("mae: size mismatch");
  if (truth.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) sum += std::abs(predicted[i] - truth[i]);
  return sum / static_cast<double>(truth.size());
}

std::string EvalReport::to_text() const {
  std::ostringstream out;
  out.precision(8);
  out << "samples," << samples << '\n'
      << "mae," << mae << '\n'
      << "grad_similarity," << grad_similarity << '\n'
      << "fpr,";
  if (fpr)
    out << *fpr;
  else
    out << "N/A";
  out << '\n'
      << "fpr_band_count," << fpr_band_count << '\n'
      << "band," << band << '\n'
      << "bsr," << bsr << '\n'
      << "class_ratio," << class_ratio << '\n';
  return out.str();
}

EvalReport evaluate_predictions(const Dataset& data, std::span<const double> values,
                                std::span<const Eigen::VectorXd> grads, double band) {
  const std::size_t n = data.samples.size();
  if (values.size() != n || grads.size() != n) throw InvalidInputError("evaluate: prediction count mismatch");
  std::vector<double> truth(n);
  std::vector<Eigen::VectorXd> tgrad(n);
  for (std::size_t i = 0; i < n; ++i) {
    truth[i] = data.samples[i].value;
    tgrad[i] = data.samples[i].grad;
  }
  EvalReport r;
  r.samples = n;
  r.band = band;
  r.mae = mean_absolute_error(values, truth);
  r.grad_similarity = grad_similarity(grads, tgrad);
  const FprResult f = fpr(values, truth, band);
  r.fpr = f.percent;
  r.fpr_band_count = f.band_count;
  r.bsr = boundary_sample_ratio(data, band);
  r.class_ratio = class_ratio(data);
  return r;
}

EvalReport evaluate(const FieldModel& model, const Dataset& data, double band) {
  const std::size_t n = data.samples.size();
  Eigen::MatrixXd q(data.dof, n), p(data.point_dim, n);
  for (std::size_t i = 0; i < n; ++i) {
    q.col(i) = data.samples[i].q;
    p.col(i) = data.samples[i].p.head(data.point_dim);
  }
  Eigen::VectorXd values;
  Eigen::MatrixXd grads;
  model.predict_with_grad(q, p, values, grads);
  std::vector<double> v(values.data(), values.data() + n);
  std::vector<Eigen::VectorXd> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = grads.col(i);
  return evaluate_predictions(data, v, g, band);
}

}  // namespace cssdf
