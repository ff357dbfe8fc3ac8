#include "cssdf/field_net.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "cssdf/errors.hpp"

namespace cssdf {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;
constexpr Eigen::Index kChunk = 4096;

double to_float(double v) { return static_cast<double>(static_cast<float>(v)); }

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("checkpoint truncated");
  return v;
}

using MapM = Eigen::Map<Eigen::MatrixXd>;
using CMapM = Eigen::Map<const Eigen::MatrixXd>;
using CMapV = Eigen::Map<const Eigen::VectorXd>;
using MapV = Eigen::Map<Eigen::VectorXd>;

// Loss terms and the seeds dL/dy (per column) and dL/dG (per column).
LossBreakdown loss_terms(const Eigen::VectorXd& y, const Eigen::MatrixXd& g, std::span<const FieldSample> batch,
                         const LossWeights& w, Eigen::VectorXd* dy, Eigen::MatrixXd* dg) {
  const auto b = static_cast<Eigen::Index>(batch.size());
  const double inv_b = 1.0 / static_cast<double>(b);
  LossBreakdown out;
  out.count = batch.size();
  if (dy) dy->resize(b);
  if (dg) dg->setZero(g.rows(), b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const FieldSample& s = batch[i];
    const double err = y[i] - s.value;
    out.dist += err * err;
    if (dy) (*dy)[i] = w.dist * 2.0 * err * inv_b;
    const Eigen::VectorXd gi = g.col(i);
    const double gn = gi.norm();
    out.eikonal += (gn - 1.0) * (gn - 1.0);
    if (gn == 0.0) {
      ++out.zero_gradients;
      out.direction += 1.0;
      continue;
    }
    const double tn = s.grad.norm();
    const Eigen::VectorXd gh = gi / gn;
    const Eigen::VectorXd th = tn > 0.0 ? Eigen::VectorXd(s.grad / tn) : Eigen::VectorXd::Zero(gi.size());
    const double cosine = gh.dot(th);
    out.direction += (1.0 - cosine) * (1.0 - cosine);
    if (dg) {
      Eigen::VectorXd v = w.eikonal * 2.0 * (gn - 1.0) * gh;
      v -= w.direction * 2.0 * (1.0 - cosine) * (th - cosine * gh) / gn;
      dg->col(i) = v * inv_b;
    }
  }
  out.dist *= inv_b;
  out.eikonal *= inv_b;
  out.direction *= inv_b;
  out.total = w.dist * out.dist + w.eikonal * out.eikonal + w.direction * out.direction;
  return out;
}

}  // namespace

struct FieldModel::Cache {
  Eigen::MatrixXd u, e;
  std::vector<Eigen::MatrixXd> in, z, zhat, gate;
  std::vector<Eigen::VectorXd> scale, mean, var, inv_std;
  Eigen::MatrixXd last;  // input of the output layer
  Eigen::VectorXd y;
};

FieldModel::FieldModel(const FieldNetConfig& config, Eigen::VectorXd lower, Eigen::VectorXd upper,
                       std::uint64_t seed)
    : config_(config), lower_(std::move(lower)), upper_(std::move(upper)) {
  if (config_.dof < 1 || (config_.point_dim != 2 && config_.point_dim != 3) || config_.hidden_layers < 0 ||
      config_.width < 1 || config_.frequencies < 0 || config_.dropout < 0.0 || config_.dropout >= 1.0)
    throw InvalidInputError("field model: invalid configuration");
  if (lower_.size() != input_dim() || upper_.size() != input_dim())
    throw InvalidInputError("field model: bounds must cover [q; p]");
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    lower_[i] = to_float(lower_[i]);
    upper_[i] = to_float(upper_[i]);
    if (!(upper_[i] > lower_[i])) throw InvalidInputError("field model: empty normalization interval");
  }
  build_layout();
  std::mt19937_64 rng(seed);
  for (const auto& l : layers_) {
    std::uniform_real_distribution<double> init(-1.0 / std::sqrt(l.cols), 1.0 / std::sqrt(l.cols));
    for (int i = 0; i < l.rows * l.cols; ++i) params_[l.w + i] = init(rng);
    for (int i = 0; i < l.rows; ++i) params_[l.b + i] = init(rng);
    for (int i = 0; i < l.rows; ++i) params_[l.gamma + i] = 1.0;
  }
  const int last = layers_.empty() ? input_dim() * (1 + 2 * config_.frequencies) : config_.width;
  std::uniform_real_distribution<double> init(-1.0 / std::sqrt(last), 1.0 / std::sqrt(last));
  for (int i = 0; i < last; ++i) params_[out_w_ + i] = init(rng);
  params_[out_b_] = init(rng);
  round_to_float();
}

FieldModel::FieldModel(const FieldModel& other)
    : config_(other.config_), lower_(other.lower_), upper_(other.upper_), params_(other.params_),
      run_mean_(other.run_mean_), run_var_(other.run_var_), layers_(other.layers_), out_w_(other.out_w_),
      out_b_(other.out_b_), training_(other.training_), clamped_(other.clamped_.load()) {}

FieldModel& FieldModel::operator=(const FieldModel& other) {
  if (this == &other) return *this;
  config_ = other.config_;
  lower_ = other.lower_;
  upper_ = other.upper_;
  params_ = other.params_;
  run_mean_ = other.run_mean_;
  run_var_ = other.run_var_;
  layers_ = other.layers_;
  out_w_ = other.out_w_;
  out_b_ = other.out_b_;
  training_ = other.training_;
  clamped_.store(other.clamped_.load());
  return *this;
}

FieldModel FieldModel::for_robot(const RobotModel& model, const FieldNetConfig& config, std::uint64_t seed,
                                 double extension) {
  FieldNetConfig c = config;
  c.dof = model.dof();
  c.point_dim = model.point_dim();
  const int n = c.dof, w = c.point_dim;
  Eigen::VectorXd lo(n + w), hi(n + w);
  lo.head(n) = model.extended_lower();
  hi.head(n) = model.extended_upper();
  const Aabb box = model.workspace_bounds(extension);
  lo.tail(w) = box.min.head(w);
  hi.tail(w) = box.max.head(w);
  return FieldModel(c, lo, hi, seed);
}

void FieldModel::build_layout() {
  layers_.clear();
  std::size_t off = 0;
  int cols = input_dim() * (1 + 2 * config_.frequencies);
  for (int l = 0; l < config_.hidden_layers; ++l) {
    Layer layer;
    layer.rows = config_.width;
    layer.cols = cols;
    layer.w = off;
    off += static_cast<std::size_t>(layer.rows) * layer.cols;
    layer.b = off;
    off += layer.rows;
    layer.gamma = off;
    off += layer.rows;
    layer.beta = off;
    off += layer.rows;
    layers_.push_back(layer);
    cols = config_.width;
  }
  out_w_ = off;
  off += cols;
  out_b_ = off;
  off += 1;
  params_.assign(off, 0.0);
  run_mean_.assign(static_cast<std::size_t>(config_.hidden_layers) * config_.width, 0.0);
  run_var_.assign(static_cast<std::size_t>(config_.hidden_layers) * config_.width, 1.0);
}

void FieldModel::round_to_float() {
  for (double& v : params_) v = to_float(v);
  for (double& v : run_mean_) v = to_float(v);
  for (double& v : run_var_) v = to_float(v);
}

Eigen::VectorXd FieldModel::input_scale() const { return 2.0 * (upper_ - lower_).cwiseInverse(); }

Eigen::MatrixXd FieldModel::normalize(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd u(x.rows(), x.cols());
  std::size_t clamped = 0;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      double v = x(r, c);
      if (v < lower_[r]) {
        v = lower_[r];
        ++clamped;
      } else if (v > upper_[r]) {
        v = upper_[r];
        ++clamped;
      }
      u(r, c) = 2.0 * (v - lower_[r]) / (upper_[r] - lower_[r]) - 1.0;
    }
  }
  if (clamped) clamped_.fetch_add(clamped);
  return u;
}

Eigen::MatrixXd FieldModel::denormalize(const Eigen::MatrixXd& u) const {
  Eigen::MatrixXd x(u.rows(), u.cols());
  for (Eigen::Index r = 0; r < u.rows(); ++r)
    x.row(r) = (u.row(r).array() + 1.0) * 0.5 * (upper_[r] - lower_[r]) + lower_[r];
  return x;
}

Eigen::MatrixXd FieldModel::encode(const Eigen::MatrixXd& u) const {
  const Eigen::Index d = u.rows();
  Eigen::MatrixXd e(d * (1 + 2 * config_.frequencies), u.cols());
  e.topRows(d) = u;
  for (int k = 0; k < config_.frequencies; ++k) {
    const double f = std::ldexp(kPi, k);
    e.middleRows(d * (1 + 2 * k), d) = (f * u.array()).sin().matrix();
    e.middleRows(d * (2 + 2 * k), d) = (f * u.array()).cos().matrix();
  }
  return e;
}

Eigen::MatrixXd FieldModel::encode_tangent(const Eigen::MatrixXd& u, const Eigen::MatrixXd& du) const {
  const Eigen::Index d = u.rows();
  Eigen::MatrixXd e(d * (1 + 2 * config_.frequencies), u.cols());
  e.topRows(d) = du;
  for (int k = 0; k < config_.frequencies; ++k) {
    const double f = std::ldexp(kPi, k);
    e.middleRows(d * (1 + 2 * k), d) = (f * (f * u.array()).cos() * du.array()).matrix();
    e.middleRows(d * (2 + 2 * k), d) = (-f * (f * u.array()).sin() * du.array()).matrix();
  }
  return e;
}

Eigen::MatrixXd FieldModel::encode_adjoint(const Eigen::MatrixXd& u, const Eigen::MatrixXd& ge) const {
  const Eigen::Index d = u.rows();
  Eigen::MatrixXd gu = ge.topRows(d);
  for (int k = 0; k < config_.frequencies; ++k) {
    const double f = std::ldexp(kPi, k);
    gu.array() += f * (f * u.array()).cos() * ge.middleRows(d * (1 + 2 * k), d).array();
    gu.array() -= f * (f * u.array()).sin() * ge.middleRows(d * (2 + 2 * k), d).array();
  }
  return gu;
}

void FieldModel::forward(const Eigen::MatrixXd& u, bool batch_stats, const std::vector<Eigen::MatrixXd>* masks,
                         Cache& c) const {
  const std::size_t nl = layers_.size();
  c.u = u;
  c.e = encode(u);
  c.in.resize(nl);
  c.z.resize(nl);
  c.zhat.resize(nl);
  c.gate.resize(nl);
  c.scale.resize(nl);
  const bool given = c.mean.size() == nl && !batch_stats;
  if (!given) {
    c.mean.resize(nl);
    c.var.resize(nl);
  }
  c.inv_std.resize(nl);
  Eigen::MatrixXd h = c.e;
  for (std::size_t l = 0; l < nl; ++l) {
    const Layer& L = layers_[l];
    CMapM W(params_.data() + L.w, L.rows, L.cols);
    CMapV b(params_.data() + L.b, L.rows);
    c.in[l] = h;
    c.z[l] = W * h;
    c.z[l].colwise() += b;
    Eigen::MatrixXd n;
    if (config_.batch_norm) {
      CMapV gamma(params_.data() + L.gamma, L.rows);
      CMapV beta(params_.data() + L.beta, L.rows);
      if (batch_stats) {
        c.mean[l] = c.z[l].rowwise().mean();
        c.var[l] = (c.z[l].colwise() - c.mean[l]).array().square().rowwise().mean();
      } else if (!given) {
        c.mean[l] = CMapV(run_mean_.data() + l * config_.width, L.rows);
        c.var[l] = CMapV(run_var_.data() + l * config_.width, L.rows);
      }
      c.inv_std[l] = (c.var[l].array() + kBnEps).rsqrt().matrix();
      c.zhat[l] = (c.z[l].colwise() - c.mean[l]).array().colwise() * c.inv_std[l].array();
      c.scale[l] = gamma.cwiseProduct(c.inv_std[l]);
      n = (c.zhat[l].array().colwise() * gamma.array()).colwise() + beta.array();
    } else {
      c.scale[l] = Eigen::VectorXd::Ones(L.rows);
      n = c.z[l];
    }
    c.gate[l] = (n.array() > 0.0).cast<double>().matrix();
    if (masks) c.gate[l].array() *= (*masks)[l].array();
    Eigen::MatrixXd r = n.cwiseProduct(c.gate[l]);
    h = l == 0 ? r : Eigen::MatrixXd(h + r);
  }
  c.last = h;
  const Eigen::Index last_dim = h.rows();
  CMapV wo(params_.data() + out_w_, last_dim);
  c.y = (wo.transpose() * h).transpose();
  c.y.array() += params_[out_b_];
}

// Reverse pass of dy/d(encoding) for unit seeds. `pis` receives the adjoint
// of each layer's normalized pre-activation.
Eigen::MatrixXd FieldModel::input_adjoint(const Cache& c, std::vector<Eigen::MatrixXd>* pis) const {
  const Eigen::Index cols = c.last.cols();
  CMapV wo(params_.data() + out_w_, c.last.rows());
  Eigen::MatrixXd g = wo * Eigen::RowVectorXd::Ones(cols);
  if (pis) pis->resize(layers_.size());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Layer& L = layers_[l];
    CMapM W(params_.data() + L.w, L.rows, L.cols);
    Eigen::MatrixXd pi = g.cwiseProduct(c.gate[l]);
    Eigen::MatrixXd delta = pi.array().colwise() * c.scale[l].array();
    if (pis) (*pis)[l] = std::move(pi);
    Eigen::MatrixXd prev = W.transpose() * delta;
    if (l > 0) prev += g;
    g = std::move(prev);
  }
  return g;
}

void FieldModel::recalibrate_statistics(std::span<const FieldSample> samples) {
  if (!config_.batch_norm || samples.empty()) return;
  const int n = config_.dof, w = config_.point_dim;
  const auto count = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd x(n + w, count);
  for (Eigen::Index i = 0; i < count; ++i) {
    x.col(i).head(n) = samples[i].q;
    x.col(i).tail(w) = samples[i].p.head(w);
  }
  Eigen::MatrixXd h = encode(normalize(x));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& L = layers_[l];
    CMapM W(params_.data() + L.w, L.rows, L.cols);
    CMapV b(params_.data() + L.b, L.rows);
    CMapV gamma(params_.data() + L.gamma, L.rows);
    CMapV beta(params_.data() + L.beta, L.rows);
    Eigen::MatrixXd z = W * h;
    z.colwise() += b;
    const Eigen::VectorXd mean = z.rowwise().mean();
    z.colwise() -= mean;
    const Eigen::VectorXd var = z.array().square().rowwise().mean();
    Eigen::Map<Eigen::VectorXd>(run_mean_.data() + l * config_.width, L.rows) = mean;
    Eigen::Map<Eigen::VectorXd>(run_var_.data() + l * config_.width, L.rows) = var;
    const Eigen::ArrayXd s = gamma.array() * (var.array() + kBnEps).rsqrt();
    Eigen::MatrixXd r = ((z.array().colwise() * s).colwise() + beta.array()).cwiseMax(0.0).matrix();
    h = l == 0 ? r : Eigen::MatrixXd(h + r);
  }
}

Eigen::MatrixXd FieldModel::assemble(const Eigen::MatrixXd& q, const Eigen::MatrixXd& p) const {
  const int n = config_.dof, w = config_.point_dim;
  if (q.rows() != n || p.rows() < w || q.cols() != p.cols())
    throw InvalidInputError("field model: input dimension mismatch");
  Eigen::MatrixXd x(n + w, q.cols());
  x.topRows(n) = q;
  x.bottomRows(w) = p.topRows(w);
  return x;
}

double FieldModel::predict(const Configuration& q, const Point& p) const {
  return predict(Eigen::MatrixXd(q), Eigen::MatrixXd(p))[0];
}

Eigen::VectorXd FieldModel::predict(const Eigen::MatrixXd& q, const Eigen::MatrixXd& p) const {
  const Eigen::MatrixXd x = assemble(q, p);
  Eigen::VectorXd out(x.cols());
  Cache c;
  for (Eigen::Index s = 0; s < x.cols(); s += kChunk) {
    const Eigen::Index k = std::min(kChunk, x.cols() - s);
    c.mean.clear();
    forward(normalize(x.middleCols(s, k)), false, nullptr, c);
    out.segment(s, k) = c.y;
  }
  return out;
}

double FieldModel::predict_with_grad(const Configuration& q, const Point& p, Eigen::VectorXd& grad) const {
  Eigen::VectorXd v;
  Eigen::MatrixXd g;
  predict_with_grad(Eigen::MatrixXd(q), Eigen::MatrixXd(p), v, g);
  grad = g.col(0);
  return v[0];
}

void FieldModel::predict_with_grad(const Eigen::MatrixXd& q, const Eigen::MatrixXd& p, Eigen::VectorXd& values,
                                   Eigen::MatrixXd& grads) const {
  const Eigen::MatrixXd x = assemble(q, p);
  const int n = config_.dof;
  const Eigen::VectorXd scale = input_scale().head(n);
  values.resize(x.cols());
  grads.resize(n, x.cols());
  Cache c;
  for (Eigen::Index s = 0; s < x.cols(); s += kChunk) {
    const Eigen::Index k = std::min(kChunk, x.cols() - s);
    c.mean.clear();
    forward(normalize(x.middleCols(s, k)), false, nullptr, c);
    values.segment(s, k) = c.y;
    const Eigen::MatrixXd gu = encode_adjoint(c.u, input_adjoint(c, nullptr));
    grads.middleCols(s, k) = gu.topRows(n).array().colwise() * scale.array();
  }
}

std::vector<Eigen::MatrixXd> FieldModel::activation_pattern(const Eigen::MatrixXd& x) const {
  Cache c;
  forward(normalize(x), false, nullptr, c);
  return c.gate;
}

LossBreakdown FieldModel::loss_gradient(std::span<const FieldSample> batch, const LossWeights& weights,
                                        const TrainPass& pass, std::mt19937_64& rng, std::vector<double>& grad) {
  if (batch.empty()) throw InvalidInputError("loss: empty batch");
  const int n = config_.dof, w = config_.point_dim;
  const auto b = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd x(n + w, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    x.col(i).head(n) = batch[i].q;
    x.col(i).tail(w) = batch[i].p.head(w);
  }
  const Eigen::MatrixXd u = normalize(x);
  const Eigen::VectorXd scale = input_scale();

  std::vector<Eigen::MatrixXd> masks;
  const bool use_masks = pass.dropout && config_.dropout > 0.0;
  if (use_masks) {
    std::bernoulli_distribution keep(1.0 - config_.dropout);
    const double inv_keep = 1.0 / (1.0 - config_.dropout);
    for (const auto& L : layers_) {
      Eigen::MatrixXd m(L.rows, b);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = keep(rng) ? inv_keep : 0.0;
      masks.push_back(std::move(m));
    }
  }
  const bool batch_stats = pass.batch_statistics && config_.batch_norm;
  Cache c;
  forward(u, batch_stats, use_masks ? &masks : nullptr, c);

  std::vector<Eigen::MatrixXd> pis;
  Eigen::MatrixXd g(n, b);
  std::vector<Cache> shifted;
  const bool need_grad = weights.eikonal != 0.0 || weights.direction != 0.0;
  if (!pass.finite_difference) {
    const Eigen::MatrixXd gu = encode_adjoint(u, input_adjoint(c, &pis));
    g = gu.topRows(n).array().colwise() * scale.head(n).array();
  } else {
    input_adjoint(c, &pis);
    shifted.resize(2 * n);
    for (int j = 0; j < n; ++j) {
      for (int sgn = 0; sgn < 2; ++sgn) {
        Eigen::MatrixXd us = u;
        us.row(j).array() += sgn == 0 ? pass.fd_step : -pass.fd_step;
        Cache& cs = shifted[2 * j + sgn];
        cs.mean = c.mean;
        cs.var = c.var;
        forward(us, false, use_masks ? &masks : nullptr, cs);
      }
      g.row(j) = (shifted[2 * j].y - shifted[2 * j + 1].y).transpose() * (scale[j] / (2.0 * pass.fd_step));
    }
  }

  Eigen::VectorXd dy;
  Eigen::MatrixXd dg;
  const LossBreakdown out = loss_terms(c.y, g, batch, weights, &dy, &dg);

  grad.assign(params_.size(), 0.0);
  const std::size_t nl = layers_.size();
  // Accumulates the parameter gradient of sum_i seed_i * y_i plus, when
  // tangents are given, of the directional derivative along them.
  auto accumulate = [&](const Cache& cc, const std::vector<Eigen::MatrixXd>& pp, const Eigen::VectorXd& seed,
                        const std::vector<Eigen::MatrixXd>* tin, const std::vector<Eigen::MatrixXd>* tz,
                        const Eigen::MatrixXd* tlast) {
    for (std::size_t l = 0; l < nl; ++l) {
      const Layer& L = layers_[l];
      const Eigen::MatrixXd delta = pp[l].array().colwise() * cc.scale[l].array();
      Eigen::MatrixXd a = cc.in[l].array().rowwise() * seed.transpose().array();
      if (tin) a += (*tin)[l];
      MapM(grad.data() + L.w, L.rows, L.cols) += delta * a.transpose();
      MapV(grad.data() + L.b, L.rows) += delta * seed;
      if (config_.batch_norm) {
        Eigen::VectorXd dgamma = pp[l].cwiseProduct(cc.zhat[l]) * seed;
        if (tz) dgamma += pp[l].cwiseProduct((*tz)[l]).rowwise().sum().cwiseProduct(cc.inv_std[l]);
        MapV(grad.data() + L.gamma, L.rows) += dgamma;
        MapV(grad.data() + L.beta, L.rows) += pp[l] * seed;
      }
    }
    Eigen::VectorXd dwo = cc.last * seed;
    if (tlast) dwo += tlast->rowwise().sum();
    MapV(grad.data() + out_w_, cc.last.rows()) += dwo;
    grad[out_b_] += seed.sum();
  };

  if (!pass.finite_difference && need_grad) {
    Eigen::MatrixXd du = Eigen::MatrixXd::Zero(n + w, b);
    du.topRows(n) = dg.array().colwise() * scale.head(n).array();
    Eigen::MatrixXd h = encode_tangent(u, du);
    std::vector<Eigen::MatrixXd> tin(nl), tz(nl);
    for (std::size_t l = 0; l < nl; ++l) {
      const Layer& L = layers_[l];
      CMapM W(params_.data() + L.w, L.rows, L.cols);
      tin[l] = h;
      tz[l] = W * h;
      Eigen::MatrixXd r = (tz[l].array().colwise() * c.scale[l].array()).matrix().cwiseProduct(c.gate[l]);
      h = l == 0 ? r : Eigen::MatrixXd(h + r);
    }
    accumulate(c, pis, dy, &tin, &tz, &h);
  } else {
    accumulate(c, pis, dy, nullptr, nullptr, nullptr);
    if (pass.finite_difference && need_grad) {
      for (int j = 0; j < n; ++j) {
        const Eigen::VectorXd seed = dg.row(j).transpose() * (scale[j] / (2.0 * pass.fd_step));
        for (int sgn = 0; sgn < 2; ++sgn) {
          std::vector<Eigen::MatrixXd> sp;
          input_adjoint(shifted[2 * j + sgn], &sp);
          accumulate(shifted[2 * j + sgn], sp, sgn == 0 ? seed : Eigen::VectorXd(-seed), nullptr, nullptr,
                     nullptr);
        }
      }
    }
  }

  if (batch_stats && pass.update_running) {
    const double unbias = b > 1 ? static_cast<double>(b) / static_cast<double>(b - 1) : 1.0;
    for (std::size_t l = 0; l < nl; ++l) {
      MapV rm(run_mean_.data() + l * config_.width, config_.width);
      MapV rv(run_var_.data() + l * config_.width, config_.width);
      rm = (1.0 - kBnMomentum) * rm + kBnMomentum * c.mean[l];
      rv = (1.0 - kBnMomentum) * rv + kBnMomentum * unbias * c.var[l];
    }
  }
  return out;
}

LossBreakdown loss(const FieldModel& model, std::span<const FieldSample> batch, const LossWeights& weights) {
  if (batch.empty()) throw InvalidInputError("loss: empty batch");
  const int n = model.config().dof, w = model.config().point_dim;
  const auto b = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd q(n, b), p(w, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    q.col(i) = batch[i].q;
    p.col(i) = batch[i].p.head(w);
  }
  Eigen::VectorXd y;
  Eigen::MatrixXd g;
  model.predict_with_grad(q, p, y, g);
  return loss_terms(y, g, batch, weights, nullptr, nullptr);
}

void FieldModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out.write("CSN1", 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, config_.dof);
  put<std::uint32_t>(out, config_.point_dim);
  put<std::uint32_t>(out, config_.frequencies);
  put<std::uint32_t>(out, config_.hidden_layers);
  for (int l = 0; l < config_.hidden_layers; ++l) put<std::uint32_t>(out, config_.width);
  put<float>(out, static_cast<float>(config_.dropout));
  put<std::uint32_t>(out, config_.batch_norm ? 1u : 0u);
  for (Eigen::Index i = 0; i < lower_.size(); ++i) put<float>(out, static_cast<float>(lower_[i]));
  for (Eigen::Index i = 0; i < upper_.size(); ++i) put<float>(out, static_cast<float>(upper_[i]));
  for (double v : params_) put<float>(out, static_cast<float>(v));
  for (double v : run_mean_) put<float>(out, static_cast<float>(v));
  for (double v : run_var_) put<float>(out, static_cast<float>(v));
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

FieldModel FieldModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "CSN1", 4) != 0) throw SchemaError("not a CSN1 checkpoint: " + path);
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion)
    throw VersionMismatchError("checkpoint version " + std::to_string(version) + " not supported");
  FieldNetConfig cfg;
  cfg.dof = static_cast<int>(get<std::uint32_t>(in));
  cfg.point_dim = static_cast<int>(get<std::uint32_t>(in));
  cfg.frequencies = static_cast<int>(get<std::uint32_t>(in));
  cfg.hidden_layers = static_cast<int>(get<std::uint32_t>(in));
  if (cfg.dof < 1 || cfg.dof > 64 || cfg.hidden_layers > 256 || cfg.frequencies > 32)
    throw SchemaError("checkpoint header has invalid dimensions");
  for (int l = 0; l < cfg.hidden_layers; ++l) {
    const int wl = static_cast<int>(get<std::uint32_t>(in));
    if (l > 0 && wl != cfg.width) throw SchemaError("checkpoint: unequal hidden widths are not supported");
    cfg.width = wl;
  }
  cfg.dropout = get<float>(in);
  cfg.batch_norm = (get<std::uint32_t>(in) & 1u) != 0;
  const int d = cfg.dof + cfg.point_dim;
  Eigen::VectorXd lo(d), hi(d);
  for (int i = 0; i < d; ++i) lo[i] = get<float>(in);
  for (int i = 0; i < d; ++i) hi[i] = get<float>(in);
  FieldModel m(cfg, lo, hi, 0);
  for (double& v : m.params_) v = get<float>(in);
  for (double& v : m.run_mean_) v = get<float>(in);
  for (double& v : m.run_var_) v = get<float>(in);
  return m;
}

}  // namespace cssdf
