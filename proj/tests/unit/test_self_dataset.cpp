#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cssdf/cspace_grid.hpp"
#include "cssdf/errors.hpp"
#include "cssdf/geometry_oracle.hpp"
#include "cssdf/self_dataset.hpp"

using namespace cssdf;

namespace {

// Disc of radius 1 centred at the origin in a 2-D configuration space.
bool in_disc(const Configuration& q) { return q.norm() <= 1.0; }

}  // namespace

TEST_CASE("bisection lands within tolerance of the boundary") {
  Configuration a(2), b(2);
  a << 0.1, 0.2;
  b << 2.0, 1.5;
  const double tol = 1e-6;
  const BoundaryPoint bp = bisect(a, true, b, in_disc, tol);
  CHECK(std::abs(bp.q.norm() - 1.0) <= tol);
  CHECK(in_disc(bp.collision_end));
  CHECK_FALSE(in_disc(bp.safe_end));
  CHECK((bp.safe_end - bp.collision_end).norm() <= tol);
  CHECK(bp.iterations == static_cast<int>(std::ceil(std::log2((b - a).norm() / tol))));
}

TEST_CASE("mining inserts the result in the matching index") {
  ExactIndex free_index(2), col_index(2);
  Configuration inside(2), outside(2);
  inside << 0.0, 0.0;
  outside << 3.0, 0.0;
  col_index.insert(inside);
  free_index.insert(outside);
  const BoundaryPoint bp = mine_boundary(free_index, col_index, outside, false, in_disc, 1e-5);
  CHECK(bp.q[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(free_index.size() + col_index.size() == 3);
  // Both indices hold only safe points: nothing to bracket against.
  ExactIndex f2(2), c2(2);
  f2.insert(outside);
  c2.insert(Configuration::Constant(2, 2.5));
  CHECK_THROWS_AS(mine_boundary(f2, c2, outside, false, in_disc, 1e-5), BoundaryNotBracketedError);
}

TEST_CASE("ground truth sign and gradient") {
  Configuration q(2), b(2);
  q << 3.0, 4.0;
  b << 0.0, 0.0;
  GroundTruth safe = ground_truth(q, b, false);
  CHECK(safe.value == doctest::Approx(5.0));
  CHECK(safe.grad[0] == doctest::Approx(0.6));
  GroundTruth hit = ground_truth(q, b, true);
  CHECK(hit.value == doctest::Approx(-5.0));
  CHECK(field_gradient(hit, true)[0] == doctest::Approx(-0.6));
  CHECK_THROWS_AS(ground_truth(b, b, false), ZeroDistanceError);
}

TEST_CASE("class balancing reaches the requested ratio") {
  const RobotModel model = load_robot(CSSDF_DATA_DIR "/robots/planar2.json");
  const auto base = sample_base_configs(model, 4000, 3);
  auto checker = [&](const Configuration& q) { return is_self_collision(model, q); };
  BalanceOptions opts;
  const auto balanced =
      balance_classes(base, checker, model.extended_lower(), model.extended_upper(), opts, 4);
  std::size_t col = 0;
  for (const auto& s : balanced) {
    col += s.colliding;
    CHECK(checker(s.q) == s.colliding);
  }
  const double ratio = static_cast<double>(balanced.size() - col) / col;
  CHECK(ratio <= opts.tau + 1e-9);
  // Prefix is the original sample set.
  for (std::size_t i = 0; i < base.size(); ++i) CHECK(balanced[i].q == base[i].q);
}

TEST_CASE("sampling is deterministic in the seed") {
  const RobotModel model = load_robot(CSSDF_DATA_DIR "/robots/planar2.json");
  const auto a = sample_base_configs(model, 100, 7), b = sample_base_configs(model, 100, 7);
  const auto c = sample_base_configs(model, 100, 8);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].q == b[i].q);
  CHECK(a[0].q != c[0].q);
}

TEST_CASE("self dataset labels agree with the checker and the grid oracle") {
  const RobotModel model = load_robot(CSSDF_DATA_DIR "/robots/planar2.json");
  SelfDatasetOptions opts;
  opts.base_samples = 3000;
  opts.seed = 2;
  DatasetReport report;
  const Dataset data = build_self_dataset(model, opts, &report);
  CHECK(data.size() == report.total);
  CHECK(report.boundary > 0);
  const CSpaceGrid grid = oracle_self_distance(model, default_grid_spec(model, 201));
  double err = 0.0;
  for (const auto& s : data.samples) {
    CHECK(sample_is_consistent(s));
    CHECK(static_cast<bool>(s.label) == is_self_collision(model, s.q));
    CHECK((s.p - model.base_position()).norm() >= 0.0);
    err += std::abs(s.value - grid.interpolate(s.q));
  }
  // Mined distances track the dense oracle up to grid resolution.
  CHECK(err / data.size() < 0.05);
}

TEST_CASE("dataset file round trip and schema errors") {
  const RobotModel model = load_robot(CSSDF_DATA_DIR "/robots/planar2.json");
  SelfDatasetOptions opts;
  opts.base_samples = 400;
  const Dataset data = build_self_dataset(model, opts);
  const std::string path = "self_roundtrip.csd";
  data.save(path);
  const Dataset back = Dataset::load(path);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back.samples[i].q == data.samples[i].q);
    CHECK(back.samples[i].value == data.samples[i].value);
    CHECK(back.samples[i].label == data.samples[i].label);
  }
  std::FILE* f = std::fopen(path.c_str(), "wb");
  std::fputs("NOPE", f);
  std::fclose(f);
  CHECK_THROWS_AS(Dataset::load(path), SchemaError);
  std::remove(path.c_str());
}

TEST_CASE("virtual points lie outside the reach") {
  const RobotModel model = load_robot(CSSDF_DATA_DIR "/robots/planar2.json");
  const auto pts = make_self_collision_points(model, model.workspace_bounds(), 200, 5, 1.0);
  for (const auto& p : pts) CHECK((p - model.base_position()).norm() > model.total_reach());

  const std::size_t n = 400;
  const auto mixed = make_self_collision_points(model, model.workspace_bounds(), n, 6, 0.5);
  std::size_t outside = 0;
  for (const auto& p : mixed) outside += (p - model.base_position()).norm() > model.total_reach() ? 1 : 0;
  CHECK(static_cast<double>(outside) >= 0.5 * n - 3.0 * std::sqrt(n * 0.25));
}

TEST_CASE("uniform collision fraction matches the grid volume") {
  const RobotModel model = load_robot(CSSDF_DATA_DIR "/robots/planar2.json");
  const CSpaceGrid grid = oracle_self_distance(model, default_grid_spec(model, 201));
  double grid_fraction = 0.0;
  for (double v : grid.values()) grid_fraction += v < 0.0 ? 1.0 : 0.0;
  grid_fraction /= static_cast<double>(grid.values().size());
  const auto base = sample_base_configs(model, 20000, 9);
  double sampled = 0.0;
  for (const auto& s : base) sampled += s.colliding ? 1.0 : 0.0;
  sampled /= static_cast<double>(base.size());
  CHECK(std::abs(sampled - grid_fraction) <= 0.02);
}

TEST_CASE("an 87/13 split is balanced to the ratio bound") {
  const RobotModel model = load_robot(CSSDF_DATA_DIR "/robots/planar2.json");
  auto base = sample_base_configs(model, 15000, 10);
  std::vector<LabeledConfig> skewed;
  std::size_t free = 0, col = 0;
  for (const auto& s : base) {
    if (s.colliding && col < 130) {
      skewed.push_back(s);
      ++col;
    } else if (!s.colliding && free < 870) {
      skewed.push_back(s);
      ++free;
    }
  }
  REQUIRE(col == 130);
  REQUIRE(free == 870);
  auto checker = [&](const Configuration& q) { return is_self_collision(model, q); };
  BalanceOptions opts;
  opts.tau = 1.25;
  const auto balanced = balance_classes(skewed, checker, model.extended_lower(), model.extended_upper(), opts, 4);
  std::size_t c = 0;
  for (const auto& s : balanced) c += s.colliding;
  const double ratio = static_cast<double>(std::max(c, balanced.size() - c)) / std::min(c, balanced.size() - c);
  CHECK(ratio <= 1.25 + 1e-9);

  // Already within the bound: nothing is added.
  const auto again = balance_classes(balanced, checker, model.extended_lower(), model.extended_upper(), opts, 5);
  CHECK(again.size() == balanced.size());
}

TEST_CASE("boundary ratio and class ratio") {
  Dataset d;
  d.dof = 1;
  for (double v : {0.01, -0.02, 0.3, -0.4}) {
    FieldSample s;
    s.q = Configuration::Zero(1);
    s.value = v;
    s.label = v < 0;
    s.grad = Eigen::VectorXd::Ones(1);
    d.samples.push_back(s);
  }
  CHECK(boundary_sample_ratio(d, 0.05) == doctest::Approx(50.0));
  CHECK(class_ratio(d) == doctest::Approx(50.0));
}
