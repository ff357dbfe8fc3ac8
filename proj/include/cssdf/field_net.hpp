#pragma once

#include <atomic>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cssdf/dataset.hpp"
#include "cssdf/robot_model.hpp"

namespace cssdf {

struct FieldNetConfig {
  int dof = 2;
  int point_dim = 2;
  int hidden_layers = 5;
  int width = 216;
  int frequencies = 4;  // Fourier octaves per normalized input
  double dropout = 0.2;
  bool batch_norm = true;
};

struct LossWeights {
  double dist = 5.0;
  double eikonal = 0.1;
  double direction = 0.2;
};

struct LossBreakdown {
  double total = 0.0;
  double dist = 0.0;
  double eikonal = 0.0;
  double direction = 0.0;
  std::size_t count = 0;
  /// Samples whose predicted gradient was exactly zero (cosine taken as 0).
  std::size_t zero_gradients = 0;
};

/// Options of one training-mode gradient evaluation.
struct TrainPass {
  /// Normalize with the batch statistics (and update the running ones)
  /// instead of the running statistics.
  bool batch_statistics = true;
  bool update_running = true;
  bool dropout = true;
  /// Estimate input gradients by central differences instead of the exact
  /// second-order pass.
  bool finite_difference = false;
  double fd_step = 1e-4;  // normalized units
};

/// Residual MLP over [q; p] with min-max input normalization and Fourier
/// encoding. Parameters live in one flat vector (layer order: W, b, gamma,
/// beta per hidden layer, then output weights and bias).
class FieldModel {
 public:
  FieldModel() = default;
  FieldModel(const FieldNetConfig& config, Eigen::VectorXd lower, Eigen::VectorXd upper, std::uint64_t seed);
  FieldModel(const FieldModel& other);
  FieldModel& operator=(const FieldModel& other);

  /// Bounds: extended joint limits for q and the workspace box for p.
  static FieldModel for_robot(const RobotModel& model, const FieldNetConfig& config, std::uint64_t seed,
                              double extension = 1.5);

  const FieldNetConfig& config() const { return config_; }
  int input_dim() const { return config_.dof + config_.point_dim; }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }

  bool training() const { return training_; }
  void set_training(bool on) { training_ = on; }

  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }
  const std::vector<double>& running_mean() const { return run_mean_; }
  const std::vector<double>& running_var() const { return run_var_; }
  /// Rounds parameters and running statistics to single precision (the
  /// checkpoint precision).
  void round_to_float();

  /// Maps bounds to [-1, 1]; values outside are clamped and counted.
  Eigen::MatrixXd normalize(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd denormalize(const Eigen::MatrixXd& u) const;
  /// d u / d x per input.
  Eigen::VectorXd input_scale() const;
  std::size_t clamped_inputs() const { return clamped_.load(); }
  void reset_clamped() { clamped_.store(0); }

  /// Eval-mode inference. Columns of `q` (n x k) and `p` (w x k) are samples.
  double predict(const Configuration& q, const Point& p) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& q, const Eigen::MatrixXd& p) const;
  /// Value and gradient with respect to raw q.
  double predict_with_grad(const Configuration& q, const Point& p, Eigen::VectorXd& grad) const;
  void predict_with_grad(const Eigen::MatrixXd& q, const Eigen::MatrixXd& p, Eigen::VectorXd& values,
                         Eigen::MatrixXd& grads) const;

  /// Eval-mode ReLU gates (1 active, 0 inactive) per hidden layer for raw
  /// [q; p] columns. Inputs sharing a pattern lie in one smooth piece.
  std::vector<Eigen::MatrixXd> activation_pattern(const Eigen::MatrixXd& x) const;

  /// Training loss on a batch and its parameter gradient, including the
  /// second-order contribution of the gradient-dependent terms. `grad` is
  /// resized to the parameter count. Updates running statistics when
  /// `pass.batch_statistics` is set.
  LossBreakdown loss_gradient(std::span<const FieldSample> batch, const LossWeights& weights,
                              const TrainPass& pass, std::mt19937_64& rng, std::vector<double>& grad);

  /// Replaces the running normalization statistics with the exact
  /// statistics of `samples` propagated without dropout, layer by layer.
  void recalibrate_statistics(std::span<const FieldSample> samples);

  void save(const std::string& path) const;
  static FieldModel load(const std::string& path);

 private:
  struct Layer {
    std::size_t w, b, gamma, beta;  // offsets into params_
    int rows, cols;
  };
  struct Cache;

  void build_layout();
  Eigen::MatrixXd encode(const Eigen::MatrixXd& u) const;
  Eigen::MatrixXd encode_tangent(const Eigen::MatrixXd& u, const Eigen::MatrixXd& du) const;
  Eigen::MatrixXd encode_adjoint(const Eigen::MatrixXd& u, const Eigen::MatrixXd& ge) const;
  void forward(const Eigen::MatrixXd& u, bool batch_stats, const std::vector<Eigen::MatrixXd>* masks,
               Cache& c) const;
  Eigen::MatrixXd input_adjoint(const Cache& c, std::vector<Eigen::MatrixXd>* deltas) const;
  Eigen::MatrixXd assemble(const Eigen::MatrixXd& q, const Eigen::MatrixXd& p) const;

  FieldNetConfig config_;
  Eigen::VectorXd lower_, upper_;
  std::vector<double> params_;
  std::vector<double> run_mean_, run_var_;
  std::vector<Layer> layers_;
  std::size_t out_w_ = 0, out_b_ = 0;
  bool training_ = false;
  mutable std::atomic<std::size_t> clamped_{0};
};

/// Eval-mode composite loss: 5 MSE + 0.1 eikonal + 0.2 direction terms by
/// default.
LossBreakdown loss(const FieldModel& model, std::span<const FieldSample> batch, const LossWeights& weights = {});

}  // namespace cssdf
