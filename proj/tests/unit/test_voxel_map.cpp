#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "cssdf/errors.hpp"
#include "cssdf/geometry_oracle.hpp"
#include "cssdf/voxel_map.hpp"

using namespace cssdf;

namespace {

std::vector<Configuration> random_configs(const RobotModel& model, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Configuration> out;
  for (int i = 0; i < n; ++i) {
    Configuration q(model.dof());
    for (int j = 0; j < q.size(); ++j)
      q[j] = std::uniform_real_distribution<double>(model.lower_limits()[j], model.upper_limits()[j])(rng);
    out.push_back(q);
  }
  return out;
}

}  // namespace

TEST_CASE("sphere and box touching") {
  Aabb box;
  box.min = Point(0, 0, 0);
  box.max = Point(1, 1, 1);
  CHECK(sphere_touches_box(Point(1.5, 0.5, 0.5), 0.5, box, 3));
  CHECK_FALSE(sphere_touches_box(Point(1.5, 1.5, 0.5), 0.7, box, 3));
  CHECK(sphere_touches_box(Point(1.5, 1.5, 9.0), 0.75, box, 2));
}

TEST_CASE("hash and voxel boxes agree") {
  Aabb box;
  box.min = Point(-1, -1, 0);
  box.max = Point(1, 1, 0);
  const VoxelConfigMap map(2, box, 0.1);
  CHECK(map.counts()[0] == 20);
  CHECK(map.counts()[2] == 1);
  const Point p(0.33, -0.71, 0.0);
  const auto g = map.hash(p);
  CHECK(map.in_bounds(g));
  CHECK(map.voxel_box(g).contains(p, 2));
  CHECK(map.unflat(map.flat(g)) == g);
  CHECK_FALSE(map.in_bounds(map.hash(Point(1.5, 0, 0))));
  CHECK(map.hash(box.min)[0] == 0);
  CHECK(map.hash(box.min)[1] == 0);
  const auto g2 = map.hash(box.min + Point(2.5 * 0.1, 0.1 * 0.1, 0.0));
  CHECK(g2[0] == 2);
  CHECK(g2[1] == 0);
}

TEST_CASE("planar map equals the brute-force sphere scan") {
  const RobotModel model = load_robot(CSSDF_DATA_DIR "/robots/planar2.json");
  const auto configs = random_configs(model, 100, 4);
  const Aabb box = model.workspace_bounds(1.0);
  const double dx = 4.0 / 50.0;
  const VoxelConfigMap map = build_voxel_map(model, configs, box, dx, 3);

  std::map<std::int64_t, std::set<std::int64_t>> ref;
  for (std::size_t id = 0; id < configs.size(); ++id)
    for (const auto& s : model.forward_spheres(configs[id]))
      for (std::int64_t f = 0; f < static_cast<std::int64_t>(map.voxel_count()); ++f)
        if (sphere_touches_box(s.center, s.radius, map.voxel_box(map.unflat(f)), 2)) ref[f].insert(id);

  CHECK(map.cells().size() == ref.size());
  for (const auto& [f, ids] : ref) {
    const auto& got = map.configs_in(f);
    CHECK(std::vector<std::int64_t>(ids.begin(), ids.end()) == got);
  }
}

TEST_CASE("risk set contains every colliding configuration") {
  const RobotModel model = load_robot(CSSDF_DATA_DIR "/robots/arm7.json");
  const auto configs = random_configs(model, 300, 5);
  const Aabb box = model.workspace_bounds(1.1);
  const VoxelConfigMap map = build_voxel_map(model, configs, box, 0.05, 2);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (int t = 0; t < 50; ++t) {
    const Point p(u(rng), u(rng), 0.3 + u(rng));
    const auto& risk = map.risk_configs(p);
    for (std::size_t id = 0; id < configs.size(); ++id)
      if (collides_with_point(model, configs[id], p))
        CHECK(std::binary_search(risk.begin(), risk.end(), static_cast<std::int64_t>(id)));
  }
  CHECK_THROWS_AS(map.risk_configs(Point(10, 0, 0)), OutOfBoundsError);
}

TEST_CASE("worker count does not change the map") {
  const RobotModel model = load_robot(CSSDF_DATA_DIR "/robots/planar3.json");
  const auto configs = random_configs(model, 200, 8);
  const Aabb box = model.workspace_bounds(1.0);
  const VoxelConfigMap a = build_voxel_map(model, configs, box, 0.05, 1);
  const VoxelConfigMap b = build_voxel_map(model, configs, box, 0.05, 4);
  CHECK(a.entry_count() == b.entry_count());
  for (const auto& [f, ids] : a.cells()) CHECK(b.configs_in(f) == ids);
}

TEST_CASE("spheres outside the box are rejected") {
  const RobotModel model = load_robot(CSSDF_DATA_DIR "/robots/planar2.json");
  Aabb small;
  small.min = Point(-0.5, -0.5, 0);
  small.max = Point(0.5, 0.5, 0);
  CHECK_THROWS_AS(build_voxel_map(model, {Configuration::Zero(2)}, small, 0.1), OutOfBoundsError);
}
