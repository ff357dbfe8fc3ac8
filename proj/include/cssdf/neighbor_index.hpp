#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <shared_mutex>
#include <vector>

#include "cssdf/common.hpp"

namespace cssdf {

struct Neighbor {
  std::int64_t id;
  double distance;
};

/// Incremental nearest-neighbour index over configurations (Euclidean, rad).
/// Ids are assigned 0, 1, 2, ... in insertion order. Queries may run
/// concurrently; inserts take an exclusive lock.
class NeighborIndex {
 public:
  explicit NeighborIndex(int dim) : dim_(dim) {}
  virtual ~NeighborIndex() = default;

  int dim() const { return dim_; }
  virtual std::int64_t insert(const Configuration& q) = 0;
  /// Up to k neighbours sorted by ascending distance.
  virtual std::vector<Neighbor> nearest(const Configuration& q, int k) const = 0;
  virtual std::size_t size() const = 0;
  virtual Configuration point(std::int64_t id) const = 0;

 protected:
  void check_dim(const Configuration& q) const;
  int dim_;
};

/// Linear scan. Exact.
class ExactIndex final : public NeighborIndex {
 public:
  explicit ExactIndex(int dim) : NeighborIndex(dim) {}

  std::int64_t insert(const Configuration& q) override;
  std::vector<Neighbor> nearest(const Configuration& q, int k) const override;
  std::size_t size() const override;
  Configuration point(std::int64_t id) const override;

 private:
  mutable std::shared_mutex mutex_;
  std::vector<double> data_;
};

struct HnswParams {
  int degree = 16;             // M
  int construction_beam = 200; // ef_construction
  int query_beam = 64;         // ef
  std::uint64_t seed = 42;
};

/// Hierarchical navigable small-world graph. Reported distances are always
/// the true distances of the returned ids.
class HnswIndex final : public NeighborIndex {
 public:
  HnswIndex(int dim, HnswParams params = {});

  std::int64_t insert(const Configuration& q) override;
  std::vector<Neighbor> nearest(const Configuration& q, int k) const override;
  std::size_t size() const override;
  Configuration point(std::int64_t id) const override;

  const HnswParams& params() const { return params_; }

 private:
  double dist(const double* a, const double* b) const;
  const double* ptr(std::int64_t id) const { return data_.data() + id * dim_; }
  std::vector<Neighbor> search_layer(const double* q, std::int64_t entry, int beam, int layer) const;
  std::vector<std::int64_t> select_neighbors(const std::vector<Neighbor>& candidates, int m) const;
  int max_degree(int layer) const { return layer == 0 ? 2 * params_.degree : params_.degree; }

  HnswParams params_;
  double level_mult_;
  std::mt19937_64 rng_;
  mutable std::shared_mutex mutex_;
  std::vector<double> data_;
  // links_[node][layer] -> neighbour ids
  std::vector<std::vector<std::vector<std::int64_t>>> links_;
  std::int64_t entry_ = -1;
  int top_layer_ = -1;
};

enum class IndexBackend { kExact, kHnsw };

std::unique_ptr<NeighborIndex> make_index(IndexBackend backend, int dim, HnswParams params = {});

}  // namespace cssdf
