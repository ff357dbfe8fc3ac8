#include "cssdf/neighbor_index.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <queue>
#include <unordered_set>

#include "cssdf/errors.hpp"

namespace cssdf {

void NeighborIndex::check_dim(const Configuration& q) const {
  if (q.size() != dim_)
    throw InvalidInputError("neighbor index: expected dimension " + std::to_string(dim_) + ", got " +
                            std::to_string(q.size()));
}

std::int64_t ExactIndex::insert(const Configuration& q) {
  check_dim(q);
  std::unique_lock lock(mutex_);
  data_.insert(data_.end(), q.data(), q.data() + dim_);
  return static_cast<std::int64_t>(data_.size() / dim_) - 1;
}

std::vector<Neighbor> ExactIndex::nearest(const Configuration& q, int k) const {
  check_dim(q);
  if (k < 1) throw InvalidInputError("nearest: k must be >= 1");
  std::shared_lock lock(mutex_);
  const std::size_t n = data_.size() / dim_;
  if (n == 0) throw EmptyIndexError("nearest: index is empty");
  std::vector<Neighbor> all(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = data_.data() + i * dim_;
    double s = 0.0;
    for (int d = 0; d < dim_; ++d) {
      const double t = q[d] - p[d];
      s += t * t;
    }
    all[i] = {static_cast<std::int64_t>(i), s};
  }
  const std::size_t kk = std::min<std::size_t>(k, n);
  auto by_dist = [](const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
  };
  std::partial_sort(all.begin(), all.begin() + kk, all.end(), by_dist);
  all.resize(kk);
  for (auto& nb : all) nb.distance = std::sqrt(nb.distance);
  return all;
}

std::size_t ExactIndex::size() const {
  std::shared_lock lock(mutex_);
  return data_.size() / dim_;
}

Configuration ExactIndex::point(std::int64_t id) const {
  std::shared_lock lock(mutex_);
  if (id < 0 || static_cast<std::size_t>(id) >= data_.size() / dim_) throw RangeError("index: bad id");
  return Eigen::Map<const Eigen::VectorXd>(data_.data() + id * dim_, dim_);
}

HnswIndex::HnswIndex(int dim, HnswParams params)
    : NeighborIndex(dim), params_(params), level_mult_(1.0 / std::log(std::max(2, params.degree))),
      rng_(params.seed) {
  if (params_.degree < 2 || params_.construction_beam < 1 || params_.query_beam < 1)
    throw InvalidInputError("hnsw: invalid parameters");
}

double HnswIndex::dist(const double* a, const double* b) const {
  double s = 0.0;
  for (int d = 0; d < dim_; ++d) {
    const double t = a[d] - b[d];
    s += t * t;
  }
  return std::sqrt(s);
}

std::vector<Neighbor> HnswIndex::search_layer(const double* q, std::int64_t entry, int beam, int layer) const {
  auto closer = [](const Neighbor& a, const Neighbor& b) { return a.distance > b.distance; };
  auto farther = [](const Neighbor& a, const Neighbor& b) { return a.distance < b.distance; };
  std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(closer)> candidates(closer);
  std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(farther)> best(farther);
  std::unordered_set<std::int64_t> visited;
  const Neighbor start{entry, dist(q, ptr(entry))};
  candidates.push(start);
  best.push(start);
  visited.insert(entry);
  while (!candidates.empty()) {
    const Neighbor c = candidates.top();
    if (c.distance > best.top().distance) break;
    candidates.pop();
    for (std::int64_t nb : links_[c.id][layer]) {
      if (!visited.insert(nb).second) continue;
      const double d = dist(q, ptr(nb));
      if (static_cast<int>(best.size()) < beam || d < best.top().distance) {
        candidates.push({nb, d});
        best.push({nb, d});
        if (static_cast<int>(best.size()) > beam) best.pop();
      }
    }
  }
  std::vector<Neighbor> out;
  out.reserve(best.size());
  while (!best.empty()) {
    out.push_back(best.top());
    best.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

// Diversity heuristic: keep a candidate only if it is closer to the base
// than to every neighbour already kept.
std::vector<std::int64_t> HnswIndex::select_neighbors(const std::vector<Neighbor>& candidates, int m) const {
  std::vector<std::int64_t> kept;
  for (const auto& c : candidates) {
    if (static_cast<int>(kept.size()) >= m) break;
    bool good = true;
    for (std::int64_t k : kept) {
      if (dist(ptr(c.id), ptr(k)) < c.distance) {
        good = false;
        break;
      }
    }
    if (good) kept.push_back(c.id);
  }
  // Fill remaining slots with the closest pruned candidates.
  for (const auto& c : candidates) {
    if (static_cast<int>(kept.size()) >= m) break;
    if (std::find(kept.begin(), kept.end(), c.id) == kept.end()) kept.push_back(c.id);
  }
  return kept;
}

std::int64_t HnswIndex::insert(const Configuration& q) {
  check_dim(q);
  std::unique_lock lock(mutex_);
  const std::int64_t id = static_cast<std::int64_t>(links_.size());
  data_.insert(data_.end(), q.data(), q.data() + dim_);
  std::uniform_real_distribution<double> unif(std::nextafter(0.0, 1.0), 1.0);
  const int level = static_cast<int>(std::floor(-std::log(unif(rng_)) * level_mult_));
  links_.emplace_back(level + 1);
  if (entry_ < 0) {
    entry_ = id;
    top_layer_ = level;
    return id;
  }
  const double* qp = ptr(id);
  std::int64_t ep = entry_;
  for (int layer = top_layer_; layer > level; --layer) {
    bool changed = true;
    double best = dist(qp, ptr(ep));
    while (changed) {
      changed = false;
      for (std::int64_t nb : links_[ep][layer]) {
        const double d = dist(qp, ptr(nb));
        if (d < best) {
          best = d;
          ep = nb;
          changed = true;
        }
      }
    }
  }
  for (int layer = std::min(level, top_layer_); layer >= 0; --layer) {
    auto cands = search_layer(qp, ep, params_.construction_beam, layer);
    auto chosen = select_neighbors(cands, params_.degree);
    links_[id][layer] = chosen;
    for (std::int64_t nb : chosen) {
      auto& nl = links_[nb][layer];
      nl.push_back(id);
      if (static_cast<int>(nl.size()) > max_degree(layer)) {
        std::vector<Neighbor> pool;
        pool.reserve(nl.size());
        for (std::int64_t x : nl) pool.push_back({x, dist(ptr(nb), ptr(x))});
        std::sort(pool.begin(), pool.end(), [](const Neighbor& a, const Neighbor& b) {
          return a.distance < b.distance;
        });
        nl = select_neighbors(pool, max_degree(layer));
      }
    }
    ep = cands.front().id;
  }
  if (level > top_layer_) {
    top_layer_ = level;
    entry_ = id;
  }
  return id;
}

std::vector<Neighbor> HnswIndex::nearest(const Configuration& q, int k) const {
  check_dim(q);
  if (k < 1) throw InvalidInputError("nearest: k must be >= 1");
  std::shared_lock lock(mutex_);
  if (entry_ < 0) throw EmptyIndexError("nearest: index is empty");
  const double* qp = q.data();
  std::int64_t ep = entry_;
  for (int layer = top_layer_; layer > 0; --layer) {
    bool changed = true;
    double best = dist(qp, ptr(ep));
    while (changed) {
      changed = false;
      for (std::int64_t nb : links_[ep][layer]) {
        const double d = dist(qp, ptr(nb));
        if (d < best) {
          best = d;
          ep = nb;
          changed = true;
        }
      }
    }
  }
  auto found = search_layer(qp, ep, std::max(params_.query_beam, k), 0);
  if (static_cast<int>(found.size()) > k) found.resize(k);
  return found;
}

std::size_t HnswIndex::size() const {
  std::shared_lock lock(mutex_);
  return links_.size();
}

Configuration HnswIndex::point(std::int64_t id) const {
  std::shared_lock lock(mutex_);
  if (id < 0 || static_cast<std::size_t>(id) >= links_.size()) throw RangeError("index: bad id");
  return Eigen::Map<const Eigen::VectorXd>(ptr(id), dim_);
}

std::unique_ptr<NeighborIndex> make_index(IndexBackend backend, int dim, HnswParams params) {
  if (backend == IndexBackend::kHnsw) return std::make_unique<HnswIndex>(dim, params);
  return std::make_unique<ExactIndex>(dim);
}

}  // namespace cssdf
