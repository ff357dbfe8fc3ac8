#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "cssdf/cspace_grid.hpp"
#include "cssdf/errors.hpp"
#include "cssdf/geometry_oracle.hpp"

using namespace cssdf;

namespace {

GridSpec box_spec(std::vector<int> counts) {
  GridSpec s;
  s.counts = counts;
  s.lower = Configuration::Constant(counts.size(), -1.0);
  s.upper = Configuration::LinSpaced(counts.size(), 1.0, 2.0);
  return s;
}

// Quadratic-time reference.
std::vector<double> brute_force(const GridSpec& spec, const std::vector<std::uint8_t>& labels) {
  const std::size_t n = spec.cell_count();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (labels[j] != labels[i]) best = std::min(best, (spec.cell_center(i) - spec.cell_center(j)).norm());
    out[i] = labels[i] ? -best : best;
  }
  return out;
}

}  // namespace

TEST_CASE("grid indexing round trip") {
  const GridSpec spec = box_spec({4, 3, 5});
  CHECK(spec.cell_count() == 60);
  for (std::size_t f = 0; f < spec.cell_count(); ++f) CHECK(spec.flat_index(spec.multi_index(f)) == f);
  CHECK(spec.multi_index(1)[2] == 1);
  CHECK(spec.cell_center(0)[0] == doctest::Approx(-1.0 + 0.25));
}

TEST_CASE("signed distance transform equals brute force") {
  std::mt19937_64 rng(5);
  for (const auto& counts : std::vector<std::vector<int>>{{17, 13}, {7, 9, 6}, {31}}) {
    const GridSpec spec = box_spec(counts);
    std::vector<std::uint8_t> labels(spec.cell_count());
    std::bernoulli_distribution coin(0.15);
    for (auto& l : labels) l = coin(rng);
    const CSpaceGrid grid = signed_distance_grid(spec, labels);
    const auto ref = brute_force(spec, labels);
    CHECK_FALSE(grid.degenerate());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK(grid.value(i) == doctest::Approx(ref[i]).epsilon(1e-9));
      const auto nn = grid.nearest()[i];
      REQUIRE(nn >= 0);
      CHECK(labels[nn] != labels[i]);
      CHECK((spec.cell_center(i) - spec.cell_center(nn)).norm() == doctest::Approx(std::abs(ref[i])));
    }
  }
}

TEST_CASE("single-class labelling is degenerate") {
  const GridSpec spec = box_spec({5, 5});
  const CSpaceGrid free_grid = signed_distance_grid(spec, std::vector<std::uint8_t>(25, 0));
  CHECK(free_grid.degenerate());
  CHECK(free_grid.value(3) == doctest::Approx(spec.diameter()));
  const CSpaceGrid full = signed_distance_grid(spec, std::vector<std::uint8_t>(25, 1));
  CHECK(full.value(3) == doctest::Approx(-spec.diameter()));
}

TEST_CASE("interpolation reproduces an affine field and its gradient") {
  const GridSpec spec = box_spec({6, 8});
  std::vector<double> values(spec.cell_count());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto c = spec.cell_center(i);
    values[i] = 0.3 * c[0] - 1.7 * c[1] + 0.25;
  }
  const CSpaceGrid grid(spec, values, std::vector<std::int64_t>(values.size(), -1), false);
  Configuration q(2);
  q << 0.123, 0.987;
  Eigen::VectorXd g;
  CHECK(grid.interpolate(q, &g) == doctest::Approx(0.3 * 0.123 - 1.7 * 0.987 + 0.25));
  CHECK(g[0] == doctest::Approx(0.3));
  CHECK(g[1] == doctest::Approx(-1.7));
  Eigen::VectorXd fd;
  CHECK(grid.finite_difference_gradient(spec.flat_index({2, 3}), fd));
  CHECK(fd[1] == doctest::Approx(-1.7));
  CHECK_FALSE(grid.finite_difference_gradient(0, fd));
}

TEST_CASE("grid file round trip") {
  const GridSpec spec = box_spec({4, 4});
  std::vector<std::uint8_t> labels(16, 0);
  labels[5] = 1;
  const CSpaceGrid grid = signed_distance_grid(spec, labels);
  const std::string path = "grid_roundtrip.csg";
  grid.save(path);
  const CSpaceGrid back = CSpaceGrid::load(path);
  std::remove(path.c_str());
  CHECK(back.values() == grid.values());
  CHECK(back.spec().counts == spec.counts);
  CHECK_THROWS_AS(CSpaceGrid::load("/nonexistent/grid.csg"), IoError);
}

TEST_CASE("point distance field is near-eikonal away from kinks") {
  const RobotModel arm = make_planar_arm({1.0, 0.8}, 0.05, 9, true);
  const GridSpec spec = default_grid_spec(arm, 61);
  const CSpaceGrid grid = oracle_point_distance(arm, spec, Point(1.2, 0.6, 0.0));
  int good = 0, total = 0;
  Eigen::VectorXd g;
  for (std::size_t i = 0; i < spec.cell_count(); ++i) {
    if (!grid.finite_difference_gradient(i, g)) continue;
    ++total;
    if (std::abs(g.norm() - 1.0) < 0.1) ++good;
  }
  CHECK(static_cast<double>(good) / total > 0.8);
  // Unreachable point: clamped box diameter everywhere.
  const CSpaceGrid far = oracle_point_distance(arm, spec, Point(5.0, 0.0, 0.0));
  CHECK(far.value(10) == doctest::Approx(spec.diameter()));
}
