#include "cssdf/voxel_map.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cssdf/errors.hpp"

namespace cssdf {

VoxelConfigMap::VoxelConfigMap(int dim, const Aabb& box, double dx) : dim_(dim), origin_(box.min), dx_(dx) {
  if (dim != 2 && dim != 3) throw InvalidInputError("voxel map: dimension must be 2 or 3");
  if (!(dx > 0.0)) throw InvalidInputError("voxel map: resolution must be positive");
  for (int i = 0; i < dim; ++i) {
    const double extent = box.max[i] - box.min[i];
    if (!(extent > 0.0)) throw InvalidInputError("voxel map: empty workspace box");
    counts_[i] = std::max(1, static_cast<int>(std::ceil(extent / dx - 1e-9)));
  }
  if (dim == 2) origin_.z() = 0.0;
}

VoxelIndex VoxelConfigMap::hash(const Point& p) const {
  VoxelIndex g{0, 0, 0};
  for (int i = 0; i < dim_; ++i) g[i] = static_cast<int>(std::floor((p[i] - origin_[i]) / dx_));
  return g;
}

bool VoxelConfigMap::in_bounds(const VoxelIndex& g) const {
  for (int i = 0; i < 3; ++i)
    if (g[i] < 0 || g[i] >= counts_[i]) return false;
  return true;
}

VoxelIndex VoxelConfigMap::unflat(std::int64_t f) const {
  VoxelIndex g;
  g[2] = static_cast<int>(f % counts_[2]);
  f /= counts_[2];
  g[1] = static_cast<int>(f % counts_[1]);
  g[0] = static_cast<int>(f / counts_[1]);
  return g;
}

Aabb VoxelConfigMap::voxel_box(const VoxelIndex& g) const {
  Aabb b;
  for (int i = 0; i < 3; ++i) {
    b.min[i] = origin_[i] + g[i] * dx_;
    b.max[i] = b.min[i] + dx_;
  }
  return b;
}

const std::vector<std::int64_t>& VoxelConfigMap::configs_in(std::int64_t flat_voxel) const {
  static const std::vector<std::int64_t> kEmpty;
  auto it = cells_.find(flat_voxel);
  return it == cells_.end() ? kEmpty : it->second;
}

const std::vector<std::int64_t>& VoxelConfigMap::risk_configs(const Point& p) const {
  VoxelIndex g = hash(p);
  // A point exactly on the upper face belongs to the last voxel.
  for (int i = 0; i < dim_; ++i)
    if (g[i] == counts_[i] && p[i] <= origin_[i] + counts_[i] * dx_) g[i] = counts_[i] - 1;
  if (!in_bounds(g)) throw OutOfBoundsError("risk_configs: point lies outside the hashed box");
  return configs_in(flat(g));
}

std::size_t VoxelConfigMap::entry_count() const {
  std::size_t n = 0;
  for (const auto& [k, v] : cells_) n += v.size();
  return n;
}

bool sphere_touches_box(const Point& center, double radius, const Aabb& box, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double c = std::clamp(center[i], box.min[i], box.max[i]);
    const double t = center[i] - c;
    s += t * t;
  }
  return s <= radius * radius;
}

VoxelConfigMap build_voxel_map(const RobotModel& model, const std::vector<Configuration>& configs,
                               const Aabb& box, double dx, int workers) {
  if (configs.empty()) throw InvalidInputError("build_voxel_map: no configurations");
  VoxelConfigMap map(model.point_dim(), box, dx);
  map.configs_ = configs;
  const int dim = map.dim_;
  workers = std::max(1, workers);

  using Entry = std::pair<std::int64_t, std::int64_t>;  // (voxel, config id)
  std::vector<std::vector<Entry>> partial(workers);
  parallel_for(configs.size(), workers, [&](std::size_t b, std::size_t e, int w) {
    auto& out = partial[w];
    for (std::size_t id = b; id < e; ++id) {
      for (const auto& s : model.forward_spheres(configs[id])) {
        VoxelIndex lo{0, 0, 0}, hi{0, 0, 0};
        for (int i = 0; i < dim; ++i) {
          if (s.center[i] - s.radius < box.min[i] || s.center[i] + s.radius > box.max[i])
            throw OutOfBoundsError("build_voxel_map: configuration " + std::to_string(id) +
                                   " has a sphere outside the workspace box");
          // One voxel of slack on each side: the exact test below settles
          // tangency cases that the rounded index would miss.
          lo[i] = std::max(0, static_cast<int>(std::floor((s.center[i] - s.radius - map.origin_[i]) / dx)) - 1);
          hi[i] = std::min(map.counts_[i] - 1,
                           static_cast<int>(std::floor((s.center[i] + s.radius - map.origin_[i]) / dx)) + 1);
        }
        VoxelIndex g;
        for (g[0] = lo[0]; g[0] <= hi[0]; ++g[0])
          for (g[1] = lo[1]; g[1] <= hi[1]; ++g[1])
            for (g[2] = lo[2]; g[2] <= hi[2]; ++g[2])
              if (sphere_touches_box(s.center, s.radius, map.voxel_box(g), dim))
                out.emplace_back(map.flat(g), static_cast<std::int64_t>(id));
      }
    }
  });

  std::vector<Entry> all;
  std::size_t total = 0;
  for (const auto& p : partial) total += p.size();
  all.reserve(total);
  for (auto& p : partial) all.insert(all.end(), p.begin(), p.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  for (const auto& [voxel, id] : all) map.cells_[voxel].push_back(id);
  return map;
}

}  // namespace cssdf
