#pragma once

#include <string>
#include <vector>

#include "cssdf/field_net.hpp"

namespace cssdf {

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int patience = 10;
  double factor = 0.5;
  double min_lr = 1e-6;
  std::size_t batch_size = 256;
  int epochs = 100;
  std::uint64_t seed = 1;
  double val_fraction = 0.2;
  LossWeights weights;
  bool finite_difference_gradients = false;
  /// Recompute the normalization statistics over the training split without
  /// dropout after every epoch, before validation.
  bool recalibrate_statistics = false;
  /// Return the parameters of the epoch with the lowest validation loss
  /// instead of the last epoch.
  bool keep_best = true;
  /// Skip parameter updates (loss bookkeeping only).
  bool frozen = false;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
  double dist = 0.0;
  double eikonal = 0.0;
  double direction = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t train_count = 0;
  std::size_t val_count = 0;
  std::size_t zero_gradients = 0;
  /// Epoch whose parameters were kept (0 when keep_best is off).
  int best_epoch = 0;

  void save_csv(const std::string& path) const;
};

/// Decoupled-weight-decay Adam over a flat parameter vector.
class AdamW {
 public:
  AdamW(std::size_t size, const TrainConfig& config);
  void step(std::vector<double>& params, const std::vector<double>& grad, double lr);

 private:
  double beta1_, beta2_, eps_, wd_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

/// Halves (by `factor`) the learning rate after `patience` epochs without
/// improvement of the monitored loss.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr, int patience, double factor, double min_lr)
      : lr_(lr), patience_(patience), factor_(factor), min_lr_(min_lr) {}
  double lr() const { return lr_; }
  void observe(double loss);

 private:
  double lr_;
  int patience_;
  double factor_;
  double min_lr_;
  double best_ = 0.0;
  bool has_best_ = false;
  int bad_ = 0;
};

/// Seeded 8:2 train/validation split of sample indices.
void split_indices(std::size_t count, double val_fraction, std::uint64_t seed, std::vector<std::size_t>& train,
                   std::vector<std::size_t>& val);

/// Mini-batch training. Throws DivergenceError on a non-finite loss after
/// restoring the parameters of the last finite epoch. Parameters end rounded
/// to single precision.
TrainHistory train(FieldModel& model, const Dataset& data, const TrainConfig& config);

}  // namespace cssdf
