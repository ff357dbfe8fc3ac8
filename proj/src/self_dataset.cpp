#include "cssdf/self_dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cssdf/errors.hpp"
#include "cssdf/geometry_oracle.hpp"

namespace cssdf {

std::vector<LabeledConfig> sample_base_configs(const RobotModel& model, std::size_t count,
                                               std::uint64_t seed) {
  if (count < 1) throw InvalidInputError("sample_base_configs: N must be >= 1");
  const Configuration lo = model.extended_lower();
  const Configuration hi = model.extended_upper();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<LabeledConfig> out(count);
  for (auto& s : out) {
    s.q.resize(model.dof());
    for (int j = 0; j < model.dof(); ++j) s.q[j] = lo[j] + (hi[j] - lo[j]) * unit(rng);
    s.colliding = is_self_collision(model, s.q);
  }
  return out;
}

std::vector<LabeledConfig> balance_classes(const std::vector<LabeledConfig>& samples,
                                           const CollisionChecker& checker, const Configuration& lower,
                                           const Configuration& upper, const BalanceOptions& options,
                                           std::uint64_t seed) {
  if (options.tau < 1.0 || options.sigma <= 0.0 || options.resample_cap < 1)
    throw InvalidInputError("balance_classes: invalid options");
  std::vector<std::size_t> col, free;
  for (std::size_t i = 0; i < samples.size(); ++i) (samples[i].colliding ? col : free).push_back(i);
  if (col.empty() || free.empty()) throw ClassMissingError("balance_classes: one class has no samples");

  const bool minority_colliding = col.size() < free.size();
  const auto& minority = minority_colliding ? col : free;
  const std::size_t major = std::max(col.size(), free.size());
  if (static_cast<double>(major) <= options.tau * static_cast<double>(minority.size())) return samples;

  const auto target = static_cast<std::size_t>(std::ceil(static_cast<double>(major) / options.tau));
  const std::size_t needed = target - minority.size();
  const std::size_t max_attempts = needed * static_cast<std::size_t>(options.resample_cap);

  std::vector<LabeledConfig> out = samples;
  out.reserve(samples.size() + needed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, options.sigma);
  std::uniform_int_distribution<std::size_t> pick(0, minority.size() - 1);
  std::size_t added = 0;
  for (std::size_t attempt = 0; attempt < max_attempts && added < needed; ++attempt) {
    const Configuration& base = samples[minority[pick(rng)]].q;
    Configuration q = base;
    for (int j = 0; j < q.size(); ++j) q[j] += noise(rng);
    if ((q.array() < lower.array()).any() || (q.array() > upper.array()).any()) continue;
    if (checker(q) != minority_colliding) continue;
    out.push_back({std::move(q), minority_colliding});
    ++added;
  }
  return out;
}

BoundaryPoint bisect(const Configuration& a, bool a_colliding, const Configuration& b,
                     const CollisionChecker& checker, double tol) {
  if (!(tol > 0.0)) throw InvalidInputError("bisect: tol must be positive");
  const double length = (b - a).norm();
  const int iterations = length > tol ? static_cast<int>(std::ceil(std::log2(length / tol))) : 0;
  Configuration lo = a, hi = b;
  for (int it = 0; it < iterations; ++it) {
    Configuration mid = 0.5 * (lo + hi);
    if (checker(mid) == a_colliding)
      lo = std::move(mid);
    else
      hi = std::move(mid);
  }
  BoundaryPoint out;
  out.q = 0.5 * (lo + hi);
  out.colliding = checker(out.q);
  out.safe_end = a_colliding ? hi : lo;
  out.collision_end = a_colliding ? lo : hi;
  out.iterations = iterations;
  return out;
}

BoundaryPoint mine_boundary(NeighborIndex& free_index, NeighborIndex& col_index, const Configuration& q,
                            bool q_colliding, const CollisionChecker& checker, double tol) {
  NeighborIndex& opposing = q_colliding ? free_index : col_index;
  auto nn = opposing.nearest(q, 1);
  Configuration partner = opposing.point(nn.front().id);
  if (checker(partner) == q_colliding) {
    // Stale entry: retry once with a wider candidate list.
    bool found = false;
    for (const auto& cand : opposing.nearest(q, 8)) {
      Configuration c = opposing.point(cand.id);
      if (checker(c) != q_colliding) {
        partner = std::move(c);
        found = true;
        break;
      }
    }
    if (!found) throw BoundaryNotBracketedError("mine_boundary: both bracket ends have the same label");
  }
  BoundaryPoint b = bisect(q, q_colliding, partner, checker, tol);
  (b.colliding ? col_index : free_index).insert(b.q);
  return b;
}

GroundTruth ground_truth(const Configuration& q, const Configuration& q_boundary, bool colliding) {
  if (q.size() != q_boundary.size()) throw InvalidInputError("ground_truth: dimension mismatch");
  const Eigen::VectorXd diff = q - q_boundary;
  const double d = diff.norm();
  if (!(d > 0.0)) throw ZeroDistanceError("ground_truth: q coincides with the boundary point");
  return {colliding ? -d : d, diff / d};
}

std::vector<Point> make_self_collision_points(const RobotModel& model, const Aabb& box, std::size_t count,
                                              std::uint64_t seed, double outside_fraction) {
  if (count < 1) throw InvalidInputError("make_self_collision_points: count must be >= 1");
  if (outside_fraction < 0.0 || outside_fraction > 1.0)
    throw InvalidInputError("make_self_collision_points: fraction must lie in [0, 1]");
  const int w = model.point_dim();
  const Point base = model.base_position();
  const double reach = model.total_reach();
  bool room = false;
  for (int i = 0; i < w; ++i)
    room = room || box.max[i] - base[i] > reach || base[i] - box.min[i] > reach;
  if (outside_fraction > 0.0 && !room)
    throw InvalidInputError("make_self_collision_points: box lies within the reachable set");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&] {
    Point p = base;
    for (int i = 0; i < w; ++i) p[i] = box.min[i] + (box.max[i] - box.min[i]) * unit(rng);
    return p;
  };
  const auto outside = static_cast<std::size_t>(std::llround(outside_fraction * static_cast<double>(count)));
  std::vector<Point> out;
  out.reserve(count);
  while (out.size() < outside) {
    Point p = draw();
    if ((p - base).head(w).norm() > reach) out.push_back(p);
  }
  while (out.size() < count) out.push_back(draw());
  return out;
}

BoundaryDistance::BoundaryDistance(int dim, IndexBackend backend)
    : boundary_(make_index(backend, dim)), free_(make_index(backend, dim)), col_(make_index(backend, dim)) {}

void BoundaryDistance::add_boundary(const BoundaryPoint& b) { boundary_->insert(b.q); }

void BoundaryDistance::add_sample(const LabeledConfig& s) { (s.colliding ? col_ : free_)->insert(s.q); }

GroundTruth BoundaryDistance::query(const Configuration& q, bool colliding) const {
  const NeighborIndex* target = boundary_.get();
  if (target->size() == 0) target = colliding ? free_.get() : col_.get();
  if (target->size() == 0) throw EmptyIndexError("boundary distance: no boundary or opposite-class samples");
  const auto nn = target->nearest(q, 1);
  GroundTruth gt = ground_truth(q, target->point(nn.front().id), colliding);
  if (colliding) gt.grad = -gt.grad;
  return gt;
}

SelfDistanceModel::SelfDistanceModel(const RobotModel& model, const std::vector<LabeledConfig>& configs,
                                     bool mine, double tol, IndexBackend backend,
                                     std::vector<BoundaryPoint>* mined)
    : model_(&model), distance_(model.dof(), backend) {
  for (const auto& j : model.joints()) limited_ = limited_ || !j.continuous;
  for (const auto& s : configs) distance_.add_sample(s);
  if (!mine) return;

  auto free_index = make_index(backend, model.dof());
  auto col_index = make_index(backend, model.dof());
  for (const auto& s : configs) (s.colliding ? *col_index : *free_index).insert(s.q);
  if (free_index->size() == 0 || col_index->size() == 0)
    throw ClassMissingError("boundary mining needs samples of both classes");
  const CollisionChecker checker = [&model](const Configuration& q) { return is_self_collision(model, q); };
  for (const auto& s : configs) {
    BoundaryPoint b = mine_boundary(*free_index, *col_index, s.q, s.colliding, checker, tol);
    distance_.add_boundary(b);
    if (mined) mined->push_back(std::move(b));
  }
  has_boundary_ = true;
}

GroundTruth SelfDistanceModel::query(const Configuration& q, bool colliding) const {
  GroundTruth gt = distance_.query(q, colliding);
  if (limited_) {
    Configuration g;
    const double lim = model_->limit_distance(q, &g);
    if (lim < gt.value && (lim < 0.0) == colliding && g.norm() > 0.0) {
      gt.value = lim;
      gt.grad = g.normalized();
    }
  }
  return gt;
}

Dataset build_self_dataset(const RobotModel& model, const SelfDatasetOptions& options, DatasetReport* report) {
  std::vector<LabeledConfig> configs = sample_base_configs(model, options.base_samples, options.seed);
  const std::size_t base_count = configs.size();
  if (options.balance) {
    const CollisionChecker checker = [&model](const Configuration& q) { return is_self_collision(model, q); };
    configs = balance_classes(configs, checker, model.extended_lower(), model.extended_upper(),
                              options.balancing, options.seed + 1);
  }

  std::vector<BoundaryPoint> mined;
  const SelfDistanceModel distance(model, configs, options.mine, options.tol, options.backend, &mined);

  const Aabb box = model.workspace_bounds(options.extension);
  const std::size_t total = configs.size() + mined.size();
  const std::vector<Point> points = make_self_collision_points(model, box, total, options.seed + 2, 1.0);

  Dataset data;
  data.dof = model.dof();
  data.point_dim = model.point_dim();
  data.samples.reserve(total);
  std::size_t next_point = 0;
  for (const auto& s : configs) {
    GroundTruth gt;
    try {
      gt = distance.query(s.q, s.colliding);
    } catch (const ZeroDistanceError&) {
      continue;
    }
    data.samples.push_back({s.q, points[next_point++], gt.value, static_cast<std::uint8_t>(s.colliding),
                            gt.grad});
  }
  for (const auto& b : mined) {
    const Eigen::VectorXd seg = b.safe_end - b.collision_end;
    const double half = 0.5 * seg.norm();
    if (!(half > 0.0)) continue;
    data.samples.push_back({b.q, points[next_point++], b.colliding ? -half : half,
                            static_cast<std::uint8_t>(b.colliding), seg / seg.norm()});
  }

  if (options.target_size > 0 && options.target_size < data.samples.size()) {
    std::mt19937_64 rng(options.seed + 3);
    std::shuffle(data.samples.begin(), data.samples.end(), rng);
    data.samples.resize(options.target_size);
  }

  if (report) {
    report->base = base_count;
    report->perturbed = configs.size() - base_count;
    report->boundary = mined.size();
    report->total = data.samples.size();
    report->bsr = boundary_sample_ratio(data);
    report->class_ratio = class_ratio(data);
  }
  return data;
}

}  // namespace cssdf
