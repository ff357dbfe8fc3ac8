#include "cssdf/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>

#include "cssdf/errors.hpp"

namespace cssdf {

void TrainHistory::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write history: " + path);
  out << "epoch,train_loss,val_loss,lr,dist,eikonal,direction\n" << std::setprecision(10);
  for (const auto& e : epochs)
    out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.lr << ',' << e.dist << ','
        << e.eikonal << ',' << e.direction << '\n';
}

AdamW::AdamW(std::size_t size, const TrainConfig& config)
    : beta1_(config.beta1), beta2_(config.beta2), eps_(config.eps), wd_(config.weight_decay), m_(size, 0.0),
      v_(size, 0.0) {}

void AdamW::step(std::vector<double>& params, const std::vector<double>& grad, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] -= lr * wd_ * params[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

void PlateauScheduler::observe(double loss) {
  // Relative threshold 1e-4, as in common plateau schedulers.
  if (!has_best_ || loss < best_ * (1.0 - 1e-4)) {
    best_ = loss;
    has_best_ = true;
    bad_ = 0;
    return;
  }
  if (++bad_ > patience_) {
    lr_ = std::max(min_lr_, lr_ * factor_);
    bad_ = 0;
  }
}

void split_indices(std::size_t count, double val_fraction, std::uint64_t seed, std::vector<std::size_t>& train,
                   std::vector<std::size_t>& val) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto nval = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(count)));
  val.assign(idx.begin(), idx.begin() + std::min(nval, count));
  train.assign(idx.begin() + std::min(nval, count), idx.end());
}

TrainHistory train(FieldModel& model, const Dataset& data, const TrainConfig& config) {
  if (!(config.lr > 0.0) || !(config.factor > 0.0 && config.factor < 1.0) || config.batch_size < 1)
    throw InvalidInputError("train: invalid configuration");
  if (data.dof != model.config().dof || data.point_dim != model.config().point_dim)
    throw InvalidInputError("train: dataset dimensions do not match the model");
  std::vector<std::size_t> train_idx, val_idx;
  split_indices(data.size(), config.val_fraction, config.seed, train_idx, val_idx);
  if (train_idx.size() < config.batch_size && train_idx.size() < 2)
    throw InvalidInputError("train: dataset smaller than one batch");

  std::vector<FieldSample> val;
  val.reserve(val_idx.size());
  for (auto i : val_idx) val.push_back(data.samples[i]);
  std::vector<FieldSample> train_set;
  if (config.recalibrate_statistics && !config.frozen) {
    train_set.reserve(train_idx.size());
    for (auto i : train_idx) train_set.push_back(data.samples[i]);
  }

  TrainHistory hist;
  hist.train_count = train_idx.size();
  hist.val_count = val_idx.size();
  AdamW opt(model.parameters().size(), config);
  PlateauScheduler sched(config.lr, config.patience, config.factor, config.min_lr);
  std::mt19937_64 rng(config.seed + 17);
  TrainPass pass;
  pass.finite_difference = config.finite_difference_gradients;
  pass.update_running = !config.frozen;

  std::vector<double> grad;
  std::vector<FieldSample> batch;
  FieldModel last_good = model;
  FieldModel best = model;
  double best_val = std::numeric_limits<double>::infinity();
  model.set_training(true);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = sched.lr();
    double weight = 0.0;
    for (std::size_t s = 0; s < train_idx.size(); s += config.batch_size) {
      const std::size_t e = std::min(train_idx.size(), s + config.batch_size);
      if (e - s < 2 && s > 0) break;  // a lone sample gives no batch statistics
      batch.clear();
      for (std::size_t k = s; k < e; ++k) batch.push_back(data.samples[train_idx[k]]);
      const LossBreakdown lb = model.loss_gradient(batch, config.weights, pass, rng, grad);
      const double bw = static_cast<double>(batch.size());
      rec.train_loss += lb.total * bw;
      rec.dist += lb.dist * bw;
      rec.eikonal += lb.eikonal * bw;
      rec.direction += lb.direction * bw;
      weight += bw;
      hist.zero_gradients += lb.zero_gradients;
      if (!std::isfinite(lb.total)) break;
      if (!config.frozen) opt.step(model.parameters(), grad, sched.lr());
    }
    rec.train_loss /= weight;
    rec.dist /= weight;
    rec.eikonal /= weight;
    rec.direction /= weight;
    model.set_training(false);
    if (!train_set.empty() && std::isfinite(rec.train_loss)) model.recalibrate_statistics(train_set);
    rec.val_loss = val.empty() ? rec.train_loss : loss(model, val, config.weights).total;
    model.set_training(true);
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) {
      model = last_good;
      model.set_training(false);
      model.round_to_float();
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch));
    }
    hist.epochs.push_back(rec);
    sched.observe(rec.val_loss);
    last_good = model;
    if (config.keep_best && rec.val_loss < best_val) {
      best_val = rec.val_loss;
      best = model;
      hist.best_epoch = epoch;
    }
  }
  if (config.keep_best && hist.best_epoch > 0) model = best;
  model.set_training(false);
  model.round_to_float();
  return hist;
}

}  // namespace cssdf
