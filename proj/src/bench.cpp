#include "cssdf/bench.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

#include "cssdf/cspace_grid.hpp"
#include "cssdf/errors.hpp"
#include "cssdf/geometry_oracle.hpp"

namespace cssdf {

std::vector<std::size_t> decade_scales(int max_exponent) {
  std::vector<std::size_t> out;
  std::size_t s = 1;
  for (int e = 0; e <= max_exponent; ++e, s *= 10) out.push_back(s);
  return out;
}

std::vector<LatencyRow> latency_bench(const FieldModel& model, const std::vector<std::size_t>& scales,
                                      int repeats, std::uint64_t seed) {
  if (repeats < 1) throw InvalidInputError("latency_bench: repeats must be >= 1");
  const int n = model.config().dof, w = model.config().point_dim;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  using clock = std::chrono::steady_clock;
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  };
  std::vector<LatencyRow> rows;
  for (std::size_t scale : scales) {
    Eigen::MatrixXd x(n + w, scale);
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      for (int r = 0; r < n + w; ++r)
        x(r, c) = model.lower()[r] + (model.upper()[r] - model.lower()[r]) * unit(rng);
    const Eigen::MatrixXd q = x.topRows(n), p = x.bottomRows(w);
    std::vector<double> td, tg;
    Eigen::VectorXd values;
    Eigen::MatrixXd grads;
    for (int r = 0; r < repeats; ++r) {
      auto t0 = clock::now();
      values = model.predict(q, p);
      auto t1 = clock::now();
      model.predict_with_grad(q, p, values, grads);
      auto t2 = clock::now();
      td.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      tg.push_back(std::chrono::duration<double, std::milli>(t2 - t1).count());
    }
    rows.push_back({scale, median(td), median(tg)});
  }
  return rows;
}

void save_latency_csv(const std::vector<LatencyRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write latency CSV: " + path);
  out << "scale,dist_ms,dist_grad_ms\n";
  for (const auto& r : rows) out << r.scale << ',' << r.dist_ms << ',' << r.grad_ms << '\n';
}

std::vector<AblationVariant> default_ablation_variants() {
  return {
      {"uniform", false, false, {}},
      {"class-balanced", true, false, {}},
      {"complete", true, true, {}},
      {"distance-only", true, true, {5.0, 0.0, 0.0}},
      {"distance+magnitude", true, true, {5.0, 0.1, 0.0}},
      {"distance+direction", true, true, {5.0, 0.0, 0.2}},
  };
}

Dataset oracle_test_set(const RobotModel& model, const AblationOptions& options) {
  const GridSpec spec = default_grid_spec(model, options.grid_cells);
  const CSpaceGrid grid = oracle_self_distance(model, spec, options.workers);
  std::mt19937_64 rng(options.seed * 7919 + 17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Aabb box = model.workspace_bounds();
  const std::vector<Point> points = make_self_collision_points(
      model, box, options.test_uniform + options.test_band, options.seed * 7919 + 18, 1.0);

  Dataset out;
  out.dof = model.dof();
  out.point_dim = model.point_dim();
  std::size_t next = 0;
  auto push = [&](const Configuration& q) {
    Eigen::VectorXd g;
    const double v = grid.interpolate(q, &g);
    if (v == 0.0 || !(g.norm() > 0.0)) return;
    out.samples.push_back({q, points[next++ % points.size()], v, static_cast<std::uint8_t>(v < 0.0),
                           g.normalized()});
  };
  for (std::size_t i = 0; i < options.test_uniform; ++i) {
    Configuration q(model.dof());
    for (int d = 0; d < q.size(); ++d) q[d] = spec.lower[d] + (spec.upper[d] - spec.lower[d]) * unit(rng);
    push(q);
  }
  std::vector<std::size_t> band;
  for (std::size_t c = 0; c < spec.cell_count(); ++c)
    if (std::abs(grid.value(c)) <= 0.05) band.push_back(c);
  if (!band.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, band.size() - 1);
    for (std::size_t i = 0; i < options.test_band; ++i) push(spec.cell_center(band[pick(rng)]));
  }
  return out;
}

std::vector<AblationRow> ablation_run(const RobotModel& model, const std::vector<AblationVariant>& variants,
                                      const AblationOptions& options) {
  const Dataset test = oracle_test_set(model, options);
  std::vector<AblationRow> rows(variants.size());
  parallel_for(variants.size(), options.workers, [&](std::size_t b, std::size_t e, int) {
    for (std::size_t i = b; i < e; ++i) {
      AblationRow& row = rows[i];
      row.variant = variants[i];
      SelfDatasetOptions ds;
      ds.seed = options.seed;
      ds.balance = variants[i].balance;
      ds.mine = variants[i].mine;
      ds.tol = options.tol;
      // Mining roughly doubles the set, so it starts from half as many draws.
      ds.base_samples = variants[i].mine ? options.samples / 2 : options.samples;
      ds.target_size = options.samples;
      const Dataset data = build_self_dataset(model, ds);
      row.train_samples = data.size();

      FieldNetConfig net = options.net;
      net.dof = model.dof();
      net.point_dim = model.point_dim();
      FieldModel field = FieldModel::for_robot(model, net, options.seed);
      TrainConfig tc;
      tc.seed = options.seed;
      tc.epochs = options.epochs;
      tc.weights = variants[i].weights;
      try {
        const TrainHistory h = train(field, data, tc);
        if (!h.epochs.empty()) row.final_val_loss = h.epochs.back().val_loss;
      } catch (const DivergenceError& err) {
        row.failed = true;
        row.message = err.what();
      }
      field.set_training(false);
      row.report = evaluate(field, test);
      row.report.bsr = boundary_sample_ratio(data);
      row.report.class_ratio = class_ratio(data);
    }
  });
  return rows;
}

void save_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write ablation CSV: " + path);
  out << "variant,bsr,class_ratio,mae,grad_similarity,fpr,fpr_band_count,train_samples,val_loss,status\n";
  out.precision(8);
  for (const auto& r : rows) {
    out << r.variant.name << ',' << r.report.bsr << ',' << r.report.class_ratio << ',' << r.report.mae << ','
        << r.report.grad_similarity << ',';
    if (r.report.fpr)
      out << *r.report.fpr;
    else
      out << "N/A";
    out << ',' << r.report.fpr_band_count << ',' << r.train_samples << ',' << r.final_val_loss << ','
        << (r.failed ? "failed" : "ok") << '\n';
  }
}

TrajBounds planning_bounds(const RobotModel& model, const PlanningOptions& options) {
  TrajBounds b;
  b.q_min = model.lower_limits();
  b.q_max = model.upper_limits();
  b.v_max = Eigen::VectorXd::Constant(model.dof(), options.v_max);
  b.a_max = Eigen::VectorXd::Constant(model.dof(), options.a_max);
  return b;
}

PlanningResult plan_trial(const RobotModel& model, const Scene& scene, const ConfigField* field,
                          const Configuration& start, const Configuration& goal, const PlanningOptions& options) {
  const CollisionChecker checker = [&](const Configuration& q) { return in_collision(model, scene, q); };
  PlanningResult r;
  const auto t0 = std::chrono::steady_clock::now();
  r.path = rrt_connect(start, goal, model.lower_limits(), model.upper_limits(), checker, options.rrt);
  r.sampling_length = path_length(r.path);
  r.initial = spline_from_path(r.path, options.segments, options.speed);
  r.optimized = optimize(r.initial, field, options.weights, planning_bounds(model, options), options.optimize);
  r.planning_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  r.metrics = measure_trajectory(r.optimized.traj, checker);
  return r;
}

}  // namespace cssdf
