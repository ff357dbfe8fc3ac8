#include "cssdf/external_dataset.hpp"

#include <algorithm>
#include <cmath>

#include "cssdf/errors.hpp"
#include "cssdf/geometry_oracle.hpp"

namespace cssdf {

double unreachable_distance(const RobotModel& model) {
  return (model.extended_upper() - model.extended_lower()).norm();
}

PointBoundary::PointBoundary(const RobotModel& model, const VoxelConfigMap& map, const Point& p,
                             const ExternalOptions& options, std::mt19937_64& rng)
    : model_(&model), p_(p), tol_(options.tol), free_(make_index(options.backend, model.dof())),
      col_(make_index(options.backend, model.dof())), boundary_(model.dof(), options.backend) {
  const auto& configs = map.configurations();
  std::vector<std::int64_t> risk;
  if ((p - model.base_position()).head(model.point_dim()).norm() <= model.total_reach())
    risk = map.risk_configs(p);
  risk_count_ = risk.size();
  if (risk.size() > options.risk_cap) {
    std::shuffle(risk.begin(), risk.end(), rng);
    risk.resize(options.risk_cap);
    std::sort(risk.begin(), risk.end());
  }

  ExactIndex risk_index(model.dof());
  for (std::int64_t id : risk) {
    const Configuration& q = configs[id];
    risk_index.insert(q);
    if (collides_with_point(model, q, p)) {
      col_->insert(q);
      ++colliding_count_;
    } else {
      free_->insert(q);
    }
  }
  if (risk.empty()) return;

  // Complement samples close to the risk set form the rest of the free pool.
  std::vector<std::int64_t> in_risk(configs.size(), 0);
  for (std::int64_t id : map.risk_configs(p)) in_risk[id] = 1;
  std::uniform_int_distribution<std::size_t> pick(0, configs.size() - 1);
  const std::size_t attempts = 4 * options.complement_cap;
  std::size_t kept = 0;
  for (std::size_t a = 0; a < attempts && kept < options.complement_cap; ++a) {
    const std::size_t id = pick(rng);
    if (in_risk[id]) continue;
    if (risk_index.nearest(configs[id], 1).front().distance > options.pool_radius) continue;
    free_->insert(configs[id]);
    ++kept;
  }
  if (col_->size() == 0 || free_->size() == 0) return;

  const CollisionChecker checker = [&model, p](const Configuration& q) { return collides_with_point(model, q, p); };
  for (std::int64_t id : risk) {
    const Configuration& q = configs[id];
    BoundaryPoint b = mine_boundary(*free_, *col_, q, checker(q), checker, tol_);
    boundary_.add_boundary(b);
    mined_.push_back(std::move(b));
  }
}

void PointBoundary::mine_from(const Configuration& q, bool colliding) {
  const Point p = p_;
  const RobotModel& model = *model_;
  const CollisionChecker checker = [&model, p](const Configuration& c) { return collides_with_point(model, c, p); };
  if (colliding && col_->size() == 0) col_->insert(q);
  if ((colliding ? free_ : col_)->size() == 0) return;
  BoundaryPoint b = mine_boundary(*free_, *col_, q, colliding, checker, tol_);
  boundary_.add_boundary(b);
  mined_.push_back(std::move(b));
}

GroundTruth PointBoundary::query(const Configuration& q, bool colliding) const {
  return boundary_.query(q, colliding);
}

FieldSample external_ground_truth(const RobotModel& model, PointBoundary& boundary, const Configuration& q) {
  model.check_configuration(q);
  FieldSample s;
  s.q = q;
  s.p = boundary.point();
  const bool colliding = collides_with_point(model, q, s.p);
  s.label = colliding ? 1 : 0;
  if (!colliding && boundary.unreachable()) {
    s.value = unreachable_distance(model);
    s.grad = Eigen::VectorXd::Unit(model.dof(), 0);
    return s;
  }
  boundary.mine_from(q, colliding);
  const GroundTruth gt = boundary.query(q, colliding);
  s.value = gt.value;
  s.grad = gt.grad;
  return s;
}

FieldSample compose_samples(const FieldSample& self_part, const FieldSample& point_part) {
  FieldSample s = point_part;
  const double v = compose_distance(self_part.value, point_part.value);
  if (v == self_part.value) s.grad = self_part.grad;
  s.value = v;
  s.label = v < 0.0 ? 1 : 0;
  return s;
}

Dataset build_external_dataset(const RobotModel& model, const std::vector<Point>& points,
                               const ExternalOptions& options, const SelfDistanceModel* self,
                               ExternalReport* report) {
  if (points.empty())
    throw InvalidInputError("external dataset needs at least one obstacle point (use gen-self for "
                            "self-collision only)");
  if (options.samples_per_point < 1) throw InvalidInputError("samples_per_point must be >= 1");
  const Configuration lo = model.extended_lower();
  const Configuration hi = model.extended_upper();

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform_q = [&](std::mt19937_64& g) {
    Configuration q(model.dof());
    for (int j = 0; j < model.dof(); ++j) q[j] = lo[j] + (hi[j] - lo[j]) * unit(g);
    return q;
  };
  std::vector<Configuration> configs(options.map_configs);
  for (auto& q : configs) q = uniform_q(rng);
  const Aabb box = model.workspace_bounds(options.extension);
  const double dx = options.dx > 0.0 ? options.dx : model.min_radius();
  const VoxelConfigMap map = build_voxel_map(model, configs, box, dx, options.workers);

  std::vector<std::vector<FieldSample>> per_point(points.size());
  std::vector<std::uint8_t> unreachable(points.size(), 0);
  parallel_for(points.size(), options.workers, [&](std::size_t b, std::size_t e, int) {
    for (std::size_t i = b; i < e; ++i) {
      std::mt19937_64 g(options.seed * 1000003ULL + i + 1);
      PointBoundary boundary(model, map, points[i], options, g);
      unreachable[i] = boundary.unreachable();
      const std::size_t from_boundary =
          boundary.unreachable()
              ? 0
              : std::min(boundary.mined().size(), static_cast<std::size_t>(std::llround(
                                                       options.boundary_fraction * options.samples_per_point)));
      std::vector<BoundaryPoint> chosen = boundary.mined();
      std::shuffle(chosen.begin(), chosen.end(), g);
      chosen.resize(from_boundary);
      auto& out = per_point[i];
      for (const auto& bp : chosen) {
        FieldSample s;
        s.q = bp.q;
        s.p = points[i];
        const Eigen::VectorXd seg = bp.safe_end - bp.collision_end;
        const double half = 0.5 * seg.norm();
        if (!(half > 0.0)) continue;
        s.label = bp.colliding ? 1 : 0;
        s.value = bp.colliding ? -half : half;
        s.grad = seg / seg.norm();
        out.push_back(std::move(s));
      }
      for (std::size_t attempt = 0; out.size() < options.samples_per_point && attempt < 20 * options.samples_per_point;
           ++attempt) {
        try {
          out.push_back(external_ground_truth(model, boundary, uniform_q(g)));
        } catch (const ZeroDistanceError&) {
        } catch (const EmptyIndexError&) {
        }
      }
      if (self) {
        for (auto& s : out) {
          FieldSample sp;
          const bool self_col = is_self_collision(model, s.q);
          const GroundTruth gt = self->query(s.q, self_col);
          sp.value = gt.value;
          sp.grad = gt.grad;
          s = compose_samples(sp, s);
        }
      }
    }
  });

  Dataset data;
  data.dof = model.dof();
  data.point_dim = model.point_dim();
  for (auto& v : per_point)
    for (auto& s : v) data.samples.push_back(std::move(s));
  if (report) {
    report->points = points.size();
    report->unreachable = static_cast<std::size_t>(std::count(unreachable.begin(), unreachable.end(), 1));
    report->samples = data.samples.size();
    report->map_entries = map.entry_count();
    report->bsr = boundary_sample_ratio(data);
    report->class_ratio = class_ratio(data);
  }
  return data;
}

}  // namespace cssdf
